"""Writes cmu_walk.bvh: a CMU-layout skeleton (inch-scale offsets, ZYX
channels, T-pose rest) driven by a synthetic walk, 343 frames at 120 Hz."""

import math

CHAIN = """HIERARCHY
ROOT Hips
{
\tOFFSET 0.00000 0.00000 0.00000
\tCHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation
\tJOINT LHipJoint
\t{
\t\tOFFSET 0 0 0
\t\tCHANNELS 0
\t\tJOINT LeftUpLeg
\t\t{
\t\t\tOFFSET 1.36306 -1.79463 0.83929
\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\tJOINT LeftLeg
\t\t\t{
\t\t\t\tOFFSET 0.00000 -7.55000 0.00000
\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\tJOINT LeftFoot
\t\t\t\t{
\t\t\t\t\tOFFSET 0.00000 -7.46000 0.00000
\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\tJOINT LeftToeBase
\t\t\t\t\t{
\t\t\t\t\t\tOFFSET 0.00000 -0.42000 2.06000
\t\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\t\tEnd Site
\t\t\t\t\t\t{
\t\t\t\t\t\t\tOFFSET 0.00000 0.00000 1.08000
\t\t\t\t\t\t}
\t\t\t\t\t}
\t\t\t\t}
\t\t\t}
\t\t}
\t}
\tJOINT RHipJoint
\t{
\t\tOFFSET 0 0 0
\t\tCHANNELS 0
\t\tJOINT RightUpLeg
\t\t{
\t\t\tOFFSET -1.30610 -1.79463 0.83929
\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\tJOINT RightLeg
\t\t\t{
\t\t\t\tOFFSET 0.00000 -7.55000 0.00000
\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\tJOINT RightFoot
\t\t\t\t{
\t\t\t\t\tOFFSET 0.00000 -7.46000 0.00000
\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\tJOINT RightToeBase
\t\t\t\t\t{
\t\t\t\t\t\tOFFSET 0.00000 -0.42000 2.06000
\t\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\t\tEnd Site
\t\t\t\t\t\t{
\t\t\t\t\t\t\tOFFSET 0.00000 0.00000 1.08000
\t\t\t\t\t\t}
\t\t\t\t\t}
\t\t\t\t}
\t\t\t}
\t\t}
\t}
\tJOINT LowerBack
\t{
\t\tOFFSET 0 0 0
\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\tJOINT Spine
\t\t{
\t\t\tOFFSET 0.02827 2.03559 -0.19338
\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\tJOINT Spine1
\t\t\t{
\t\t\t\tOFFSET 0.05672 2.04885 -0.04275
\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\tJOINT Neck
\t\t\t\t{
\t\t\t\t\tOFFSET 0 0 0
\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\tJOINT Neck1
\t\t\t\t\t{
\t\t\t\t\t\tOFFSET -0.05417 1.74624 0.17202
\t\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\t\tJOINT Head
\t\t\t\t\t\t{
\t\t\t\t\t\t\tOFFSET 0.10407 1.76136 -0.12397
\t\t\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\t\t\tEnd Site
\t\t\t\t\t\t\t{
\t\t\t\t\t\t\t\tOFFSET 0.03720 1.77044 0.05021
\t\t\t\t\t\t\t}
\t\t\t\t\t\t}
\t\t\t\t\t}
\t\t\t\t}
{arms}\t\t\t}
\t\t}
\t}
}
"""

ARM = """\t\t\t\tJOINT {s}Shoulder
\t\t\t\t{{
\t\t\t\t\tOFFSET 0 0 0
\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\tJOINT {s}Arm
\t\t\t\t\t{{
\t\t\t\t\t\tOFFSET {x0:.5f} 0.26000 0.00000
\t\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\t\tJOINT {s}ForeArm
\t\t\t\t\t\t{{
\t\t\t\t\t\t\tOFFSET {x1:.5f} 0.00000 0.00000
\t\t\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\t\t\tJOINT {s}Hand
\t\t\t\t\t\t\t{{
\t\t\t\t\t\t\t\tOFFSET {x2:.5f} 0.00000 0.00000
\t\t\t\t\t\t\t\tCHANNELS 3 Zrotation Yrotation Xrotation
\t\t\t\t\t\t\t\tEnd Site
\t\t\t\t\t\t\t\t{{
\t\t\t\t\t\t\t\t\tOFFSET {x3:.5f} 0.00000 0.00000
\t\t\t\t\t\t\t\t}}
\t\t\t\t\t\t\t}}
\t\t\t\t\t\t}}
\t\t\t\t\t}}
\t\t\t\t}}
"""

# Channel order of the joints above, in declaration order.
JOINTS = ["Hips", "LeftUpLeg", "LeftLeg", "LeftFoot", "LeftToeBase",
          "RightUpLeg", "RightLeg", "RightFoot", "RightToeBase",
          "LowerBack", "Spine", "Spine1", "Neck", "Neck1", "Head",
          "LeftShoulder", "LeftArm", "LeftForeArm", "LeftHand",
          "RightShoulder", "RightArm", "RightForeArm", "RightHand"]

FRAMES = 343
FRAME_TIME = 1.0 / 120.0
UNIT = 0.056444


def frame(k):
    t = k * FRAME_TIME
    w = 2.0 * math.pi * t / 1.1
    rot = {j: [0.0, 0.0, 0.0] for j in JOINTS}  # (Z, Y, X) degrees
    rot["LeftUpLeg"][2] = -24.0 * math.sin(w)
    rot["RightUpLeg"][2] = 24.0 * math.sin(w)
    rot["LeftLeg"][2] = 6.0 + 40.0 * max(0.0, math.cos(w))
    rot["RightLeg"][2] = 6.0 + 40.0 * max(0.0, -math.cos(w))
    rot["LeftArm"][0] = -72.0
    rot["RightArm"][0] = 72.0
    rot["LeftArm"][1] = 18.0 * math.sin(w)
    rot["RightArm"][1] = 18.0 * math.sin(w)
    rot["LeftForeArm"][1] = -15.0
    rot["RightForeArm"][1] = 15.0
    rot["Head"][2] = 12.0 + 4.0 * math.sin(0.5 * w)
    rot["Spine"][1] = 3.0 * math.sin(w)
    x = 0.2 * math.sin(0.3 * w)
    y = 16.8 + 0.25 * math.cos(2.0 * w)
    z = 1.35 / UNIT * t
    values = [x, y, z] + rot["Hips"]
    for j in JOINTS[1:]:
        values += rot[j]
    return " ".join(f"{v:.5f}" for v in values)


def main():
    arms = ARM.format(s="Left", x0=3.11, x1=5.05, x2=4.65, x3=1.2) + \
        ARM.format(s="Right", x0=-3.11, x1=-5.05, x2=-4.65, x3=-1.2)
    with open("cmu_walk.bvh", "w") as out:
        out.write(CHAIN.replace("{arms}", arms))
        out.write(f"MOTION\nFrames: {FRAMES}\nFrame Time: {FRAME_TIME:.7f}\n")
        for k in range(FRAMES):
            out.write(frame(k) + "\n")


if __name__ == "__main__":
    main()
