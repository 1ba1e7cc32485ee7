// Client view state: only ever reflects the latest server frame; entity motion
// is never extrapolated past it.

import { Frame } from "./protocol.js";

export type ViewMode = "zenithal" | "subjective" | "both";
export type InputMode = "keyboard" | "gamepad";

export interface ViewState {
  frame: Frame | null;
  connected: boolean;
  session: string | null;
  inputMode: InputMode;
  view: ViewMode;
  lastError: string | null;
  eventLog: string[];
}

export function initialState(view: ViewMode = "both"): ViewState {
  return {
    frame: null,
    connected: false,
    session: null,
    inputMode: "keyboard",
    view,
    lastError: null,
    eventLog: [],
  };
}

export function acceptFrame(state: ViewState, frame: Frame): ViewState {
  const eventLog =
    frame.event !== "none" ? [...state.eventLog.slice(-9), frame.event] : state.eventLog;
  return { ...state, frame, lastError: null, eventLog };
}

export function markError(state: ViewState, error: string): ViewState {
  // The last good frame is retained so the room does not blank out.
  return { ...state, lastError: error };
}
