/**
 * WebSocket client: reconnects with backoff, hands parsed frames to the
 * view model, and exposes a send() that silently drops when offline
 * (callers gate dispatch through the view model anyway).
 */

import { ClientMessage, encode, parseServerMessage, ServerMessage } from "./protocol.js";

export interface ClientHandlers {
  onMessage: (msg: ServerMessage) => void;
  onStatus: (connected: boolean) => void;
}

export class ServerClient {
  private ws: WebSocket | null = null;
  private closed = false;
  private backoffMs = 500;

  constructor(
    private readonly url: string,
    private readonly handlers: ClientHandlers,
  ) {}

  connect(): void {
    if (this.closed) return;
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = 500;
      this.handlers.onStatus(true);
    };
    ws.onmessage = (event) => {
      const msg = parseServerMessage(String(event.data));
      if (msg) this.handlers.onMessage(msg);
    };
    ws.onclose = () => {
      this.handlers.onStatus(false);
      this.ws = null;
      if (!this.closed) {
        setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, 8000);
      }
    };
    ws.onerror = () => ws.close();
  }

  send(msg: ClientMessage): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false;
    this.ws.send(encode(msg));
    return true;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
