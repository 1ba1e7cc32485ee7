import { describe, expect, it } from "vitest";

import { controlMessage, isValidFrame, parseServerMessage, steerMessage } from "./protocol.js";

const FRAME = {
  type: "frame",
  t: 0.05,
  entities: [{ id: 1, class: "robot", x: 1, y: 2, theta: 0, radius_or_extents: 0.35 }],
  subjective_visible_ids: [1],
  intentions: [],
  robot_plan: [],
  event: "none",
  room: { width_m: 8, depth_m: 6 },
  person_id: 2,
};

describe("parseServerMessage", () => {
  it("accepts well-formed frames", () => {
    const message = parseServerMessage(JSON.stringify(FRAME));
    expect(message).not.toBeNull();
    expect(message!.type).toBe("frame");
  });

  it("rejects malformed json", () => {
    expect(parseServerMessage("{not json")).toBeNull();
  });

  it("rejects frames with missing fields", () => {
    const broken = { ...FRAME, entities: [{ id: "x" }] };
    expect(parseServerMessage(JSON.stringify(broken))).toBeNull();
    expect(isValidFrame(broken)).toBe(false);
  });

  it("passes acks and errors through", () => {
    expect(parseServerMessage(JSON.stringify({ type: "ack", ack: "connected", session: "s" }))!.type).toBe("ack");
    expect(parseServerMessage(JSON.stringify({ type: "error", error: "session busy" }))!.type).toBe("error");
  });

  it("rejects unknown message types", () => {
    expect(parseServerMessage(JSON.stringify({ type: "dance" }))).toBeNull();
  });
});

describe("client messages", () => {
  it("steer commands carry snake_case fields and the session token", () => {
    expect(JSON.parse(steerMessage(0.5, 0, "tok"))).toEqual({
      type: "steer",
      vx: 0.5,
      vy: 0,
      session: "tok",
    });
  });

  it("control messages carry their kind", () => {
    expect(JSON.parse(controlMessage("reset", "tok"))).toEqual({ type: "reset", session: "tok" });
  });
});
