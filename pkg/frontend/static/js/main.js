// Entry point: wires the websocket, input capture, and the two canvas views.
import { CommandThrottle, keysToCommand, stickToCommand } from "./input.js";
import { connect, serverUrl } from "./net.js";
import { controlMessage, steerMessage } from "./protocol.js";
import { buildSubjectiveDrawList, buildZenithalDrawList, paint } from "./render.js";
import { acceptFrame, initialState, markError } from "./state.js";
const FRUSTUM = { halfAngleRad: Math.PI / 3, rangeM: 7.0 };
function byId(id) {
    const element = document.getElementById(id);
    if (!element)
        throw new Error(`missing element #${id}`);
    return element;
}
function main() {
    const params = new URLSearchParams(window.location.search);
    const view = (params.get("view") ?? "both");
    let state = initialState(view);
    const zenithal = byId("zenithal");
    const subjective = byId("subjective");
    const status = byId("status");
    const events = byId("events");
    const pressed = new Set();
    const throttle = new CommandThrottle();
    const connection = connect(serverUrl(), (message) => {
        if (message.type === "frame") {
            state = acceptFrame(state, message);
        }
        else if (message.type === "ack" && typeof message.session === "string") {
            state = { ...state, session: message.session };
        }
        else if (message.type === "error") {
            state = markError(state, message.error);
        }
    }, () => {
        state = markError(state, "malformed frame");
    }, (connected) => {
        state = { ...state, connected };
    });
    window.addEventListener("keydown", (event) => {
        pressed.add(event.code);
        if (event.code === "KeyR" && state.session)
            connection.send(controlMessage("reset", state.session));
        if (event.code === "KeyP" && state.session)
            connection.send(controlMessage("pause", state.session));
        if (event.code === "KeyG" && state.session)
            connection.send(controlMessage("start", state.session));
    });
    window.addEventListener("keyup", (event) => pressed.delete(event.code));
    window.addEventListener("blur", () => pressed.clear());
    function captureCommand(nowMs) {
        const session = state.session;
        if (!session)
            return;
        let command = keysToCommand(pressed);
        const pads = navigator.getGamepads ? navigator.getGamepads() : [];
        const pad = pads && pads[0];
        if (pad && command.vx === 0 && command.vy === 0) {
            state = { ...state, inputMode: "gamepad" };
            command = stickToCommand(pad.axes[0] ?? 0, pad.axes[1] ?? 0);
        }
        if (throttle.shouldSend(command, nowMs)) {
            connection.send(steerMessage(command.vx, command.vy, session));
        }
    }
    function repaint(frame) {
        const zctx = zenithal.getContext("2d");
        const sctx = subjective.getContext("2d");
        if (zctx && state.view !== "subjective") {
            paint(zctx, buildZenithalDrawList(frame, FRUSTUM), {
                widthPx: zenithal.width,
                heightPx: zenithal.height,
                worldWidth: frame.room.width_m,
                worldDepth: frame.room.depth_m,
            });
        }
        if (sctx && state.view !== "zenithal") {
            paint(sctx, buildSubjectiveDrawList(frame), {
                widthPx: subjective.width,
                heightPx: subjective.height,
                worldWidth: frame.room.width_m,
                worldDepth: frame.room.depth_m,
            }, true);
        }
    }
    function loop(nowMs) {
        captureCommand(nowMs);
        if (state.frame)
            repaint(state.frame);
        status.textContent = [
            state.connected ? "connected" : "disconnected",
            state.frame ? `t=${state.frame.t.toFixed(2)}s` : "waiting for frames",
            state.lastError ? `error: ${state.lastError}` : "",
        ].filter(Boolean).join(" | ");
        status.className = state.lastError ? "bad" : "ok";
        events.textContent = state.eventLog.join(" -> ");
        requestAnimationFrame(loop);
    }
    requestAnimationFrame(loop);
}
main();
