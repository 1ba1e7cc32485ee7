// Client view state: only ever reflects the latest server frame; entity motion
// is never extrapolated past it.
export function initialState(view = "both") {
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
export function acceptFrame(state, frame) {
    const eventLog = frame.event !== "none" ? [...state.eventLog.slice(-9), frame.event] : state.eventLog;
    return { ...state, frame, lastError: null, eventLog };
}
export function markError(state, error) {
    // The last good frame is retained so the room does not blank out.
    return { ...state, lastError: error };
}
