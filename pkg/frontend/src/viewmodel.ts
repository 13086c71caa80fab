/**
 * Client-side state: the latest snapshot plus presentation bookkeeping.
 * The view model never simulates; it only holds what the server sent.
 */

import {
  APPROACHES,
  ApproachName,
  ModeName,
  ServerMessage,
  StateMessage,
} from "./protocol.js";

export const STALE_AFTER_MS = 2000;
export const QUEUE_HISTORY_S = 60;

export interface Banner {
  text: string;
  kind: "info" | "warning" | "error";
  at: number; // ms epoch
}

interface QueueSample {
  clock: number;
  count: number;
}

/** Fixed-window history of queue lengths for the sparkline. */
export class QueueHistory {
  private samples: QueueSample[] = [];

  push(clock: number, count: number): void {
    this.samples.push({ clock, count });
    const cutoff = clock - QUEUE_HISTORY_S;
    let drop = 0;
    while (drop < this.samples.length && this.samples[drop]!.clock < cutoff) {
      drop += 1;
    }
    if (drop > 0) this.samples.splice(0, drop);
  }

  window(): ReadonlyArray<QueueSample> {
    return this.samples;
  }
}

export class ViewModel {
  snapshot: StateMessage | null = null;
  scenario: Record<string, number> | null = null;
  metrics: Record<string, unknown> | null = null;
  connected = false;
  banners: Banner[] = [];
  queues: Record<ApproachName, QueueHistory>;
  private lastStateAt = -Infinity;
  private readonly now: () => number;
  private readonly maxBanners = 6;

  constructor(now: () => number = () => Date.now()) {
    this.now = now;
    this.queues = Object.fromEntries(
      APPROACHES.map((a) => [a, new QueueHistory()]),
    ) as Record<ApproachName, QueueHistory>;
  }

  ingest(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello":
        this.scenario = msg.scenario;
        this.pushBanner(`connected (protocol v${msg.version})`, "info");
        break;
      case "state":
        // Latest wins; the server guarantees increasing seq, but a
        // reconnect may restart the stream.
        if (this.snapshot && msg.seq <= this.snapshot.seq && msg.clock < this.snapshot.clock) {
          break;
        }
        this.snapshot = msg;
        this.lastStateAt = this.now();
        for (const a of APPROACHES) {
          this.queues[a].push(msg.clock, msg.queues[a]);
        }
        for (const w of msg.warnings) {
          this.pushBanner(`t=${w.time.toFixed(1)}s ${w.text}`, "warning");
        }
        break;
      case "metrics":
        this.metrics = msg.report;
        this.pushBanner("scenario finished; metrics received", "info");
        break;
      case "error":
        this.pushBanner(`${msg.code}: ${msg.text}`, "error");
        break;
    }
  }

  setConnected(up: boolean): void {
    this.connected = up;
    if (!up) this.pushBanner("connection lost", "error");
  }

  /** No fresh snapshot for a while: show the disconnected banner. */
  isStale(): boolean {
    return this.now() - this.lastStateAt > STALE_AFTER_MS;
  }

  mode(): ModeName {
    return this.snapshot?.mode ?? "wizard_of_oz";
  }

  /** Gesture dispatch is allowed only live and in Wizard-of-Oz mode. */
  canDispatch(): { ok: boolean; reason: string } {
    if (!this.connected || this.isStale()) {
      return { ok: false, reason: "not connected" };
    }
    if (this.mode() !== "wizard_of_oz") {
      return { ok: false, reason: "autonomous mode is driving" };
    }
    return { ok: true, reason: "" };
  }

  pushBanner(text: string, kind: Banner["kind"]): void {
    this.banners.push({ text, kind, at: this.now() });
    if (this.banners.length > this.maxBanners) {
      this.banners.splice(0, this.banners.length - this.maxBanners);
    }
  }
}
