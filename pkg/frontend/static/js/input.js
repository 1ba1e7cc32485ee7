// Steering input: WASD/arrow keys or the gamepad left stick mapped to a
// body-frame velocity, normalized to the avatar's speed limit. Commands are
// throttled so they never out-pace the frame rate; releasing everything sends
// a single zero command.
export const SPEED_LIMIT = 0.5;
export const COMMAND_INTERVAL_MS = 50; // 20 Hz ceiling
const FORWARD_KEYS = new Set(["KeyW", "ArrowUp"]);
const BACK_KEYS = new Set(["KeyS", "ArrowDown"]);
const LEFT_KEYS = new Set(["KeyA", "ArrowLeft"]);
const RIGHT_KEYS = new Set(["KeyD", "ArrowRight"]);
export function clampToSpeedLimit(vx, vy, limit = SPEED_LIMIT) {
    const speed = Math.hypot(vx, vy);
    if (speed > limit && speed > 0) {
        const scale = limit / speed;
        return { vx: vx * scale, vy: vy * scale };
    }
    return { vx, vy };
}
export function keysToCommand(pressed, limit = SPEED_LIMIT) {
    let forward = 0;
    let left = 0;
    for (const code of pressed) {
        if (FORWARD_KEYS.has(code))
            forward += 1;
        if (BACK_KEYS.has(code))
            forward -= 1;
        if (LEFT_KEYS.has(code))
            left += 1;
        if (RIGHT_KEYS.has(code))
            left -= 1;
    }
    forward = Math.sign(forward);
    left = Math.sign(left);
    if (forward === 0 && left === 0)
        return { vx: 0, vy: 0 };
    return clampToSpeedLimit(forward * limit, left * limit, limit);
}
export function stickToCommand(stickX, stickY, limit = SPEED_LIMIT, deadzone = 0.15) {
    // Stick up is -y in gamepad axes; up maps to forward (+x body frame) and
    // stick left maps to the body's left (+y).
    const magnitude = Math.hypot(stickX, stickY);
    if (magnitude < deadzone)
        return { vx: 0, vy: 0 };
    return clampToSpeedLimit(-stickY * limit, -stickX * limit, limit);
}
export class CommandThrottle {
    constructor(intervalMs = COMMAND_INTERVAL_MS) {
        this.intervalMs = intervalMs;
        this.lastSentAt = -Infinity;
        this.lastWasZero = true;
    }
    /** Decide whether a command should go on the wire at the given time. */
    shouldSend(command, nowMs) {
        const zero = command.vx === 0 && command.vy === 0;
        if (zero && this.lastWasZero)
            return false; // one zero on release is enough
        if (nowMs - this.lastSentAt < this.intervalMs && !(zero && !this.lastWasZero)) {
            return false;
        }
        this.lastSentAt = nowMs;
        this.lastWasZero = zero;
        return true;
    }
}
