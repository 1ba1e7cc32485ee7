// Wire protocol shared with the server: one JSON text message per frame or
// command over a single websocket, each self-described by its "type" field.
export function parseServerMessage(raw) {
    let data;
    try {
        data = JSON.parse(raw);
    }
    catch {
        return null;
    }
    if (typeof data !== "object" || data === null)
        return null;
    const message = data;
    if (message.type === "frame") {
        return isValidFrame(data) ? data : null;
    }
    if (message.type === "ack" || message.type === "error") {
        return data;
    }
    return null;
}
export function isValidFrame(data) {
    const f = data;
    return (typeof f === "object" &&
        f !== null &&
        f.type === "frame" &&
        typeof f.t === "number" &&
        Array.isArray(f.entities) &&
        Array.isArray(f.subjective_visible_ids) &&
        Array.isArray(f.intentions) &&
        Array.isArray(f.robot_plan) &&
        typeof f.event === "string" &&
        f.entities.every((e) => typeof e.id === "number" &&
            typeof e.x === "number" &&
            typeof e.y === "number" &&
            typeof e.theta === "number"));
}
export function steerMessage(vx, vy, session) {
    return JSON.stringify({ type: "steer", vx, vy, session });
}
export function controlMessage(kind, session) {
    return JSON.stringify({ type: kind, session });
}
