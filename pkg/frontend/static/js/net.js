// Websocket plumbing: connect to the server, surface parsed messages, expose a
// send function for steering and session control.
import { parseServerMessage } from "./protocol.js";
export function connect(url, onMessage, onMalformed, onStatus) {
    const socket = new WebSocket(url);
    socket.onopen = () => onStatus(true);
    socket.onclose = () => onStatus(false);
    socket.onmessage = (event) => {
        const message = parseServerMessage(String(event.data));
        if (message === null) {
            onMalformed(String(event.data));
        }
        else {
            onMessage(message);
        }
    };
    return {
        socket,
        send: (text) => {
            if (socket.readyState === WebSocket.OPEN)
                socket.send(text);
        },
    };
}
export function serverUrl() {
    const params = new URLSearchParams(window.location.search);
    const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
    const port = params.get("port") ?? window.location.port ?? "8732";
    return `ws://${host}:${port}/ws`;
}
