/**
 * Keyboard bindings for gesture dispatch.
 *
 * F/B/Z/X/L/R/C mirror the original robot controller's key handler; the
 * all-stop gesture has no key there, so the console assigns A.
 */

import { CommandMessage, SignalName } from "./protocol.js";

export const KEY_BINDINGS: Readonly<Record<string, SignalName>> = {
  F: "front_stop",
  B: "behind_stop",
  Z: "front_behind_stop",
  X: "left_right_stop",
  L: "start_left",
  R: "start_right",
  C: "change_sign",
  A: "all_stop",
};

/** Command message for a key press, or null for unbound keys. */
export function commandForKey(key: string): CommandMessage | null {
  const signal = KEY_BINDINGS[key.toUpperCase()];
  return signal ? { type: "command", signal } : null;
}
