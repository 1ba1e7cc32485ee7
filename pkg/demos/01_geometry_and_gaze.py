"""A walking tour of the geometric primitives: how the vertical gaze cutoff
decides what a person notices, and how a swept disc finds first contact.

Run:  python3 demos/01_geometry_and_gaze.py
"""

import math

from intentsim.geometry import Circle, Frustum, Pose2, in_frustum, swept_collision

print("== gaze-limited visibility ==")
print("A person (eye height 1.6 m) looks straight ahead. Whether they notice a")
print("floor-level body depends on how far below horizontal their gaze reaches.\n")

observer = Pose2(0.0, 0.0, 0.0)
ball = Circle(radius=0.15, height=0.15)
robot = Circle(radius=0.35, height=1.6)

for distance in (1.0, 2.0, 4.0, 6.0):
    depression = math.degrees(math.atan2(1.6 - ball.height, distance))
    prints = [f"ball {distance:.0f} m ahead needs {depression:4.1f} deg of gaze:"]
    for gaze_deg in (10, 20, 35, 50):
        frustum = Frustum(math.radians(60), 7.0, math.radians(gaze_deg))
        seen = in_frustum(observer, 1.6, frustum, Pose2(distance, 0, 0), ball)
        prints.append(f"{gaze_deg} deg {'sees it' if seen else 'misses '}")
    print("  " + " | ".join(prints))

print("\nA standing robot is as tall as the eye line, so it is noticed at any")
print("gaze as soon as it enters the horizontal sector:")
for gaze_deg in (10, 50):
    frustum = Frustum(math.radians(60), 7.0, math.radians(gaze_deg))
    seen = in_frustum(observer, 1.6, frustum, Pose2(1.0, 0, 0), robot)
    print(f"  gaze {gaze_deg:>2} deg -> robot 1 m ahead: {'visible' if seen else 'hidden'}")

print("\n== swept collision ==")
print("Walk a 0.30 m person-disc up a 4 m line with a ball on it. Contact is")
print("expected when the separation drops below 0.30 + 0.15 = 0.45 m:\n")
path = [Pose2(0, 0, 0), Pose2(0, 4, 0)]
hit = swept_collision(path, Circle(0.30), [(Pose2(0, 2, 0), ball)], step=0.05)
arc, index = hit
print(f"  first contact at arc length {arc:.2f} m (analytic 1.55 m), obstacle #{index}")

hit = swept_collision(path, Circle(0.30), [(Pose2(2, 2, 0), ball)], step=0.05)
print(f"  with the ball moved 2 m aside: {'no contact' if hit is None else hit}")
