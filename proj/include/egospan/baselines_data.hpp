#pragma once

// Constant-pose baselines in the normalized local frame (hip midpoint at the
// origin, hip line along +x, facing +z, 1.70 m tall). Keypoint order follows
// kKeypointNames. Generated once from the default subject and frozen.

#include <array>

namespace egospan::baseline_data {

inline constexpr std::array<std::array<double, 3>, 15> kStandBody = {{
    {0.000000, 0.050000, 0.000000},    // pelvis
    {0.000000, 0.570000, 0.000000},    // neck
    {0.000000, 0.840000, 0.000000},    // head
    {0.180000, 0.540000, 0.000000},    // l_shoulder
    {0.210313, 0.251589, 0.000000},    // l_elbow
    {0.237387, -0.006003, 0.022660},   // l_wrist
    {-0.180000, 0.540000, 0.000000},   // r_shoulder
    {-0.210313, 0.251589, 0.000000},   // r_elbow
    {-0.237387, -0.006003, 0.022660},  // r_wrist
    {0.090000, 0.000000, 0.000000},    // l_hip
    {0.090000, -0.440000, 0.000000},   // l_knee
    {0.090000, -0.860000, 0.000000},   // l_ankle
    {-0.090000, 0.000000, 0.000000},   // r_hip
    {-0.090000, -0.440000, 0.000000},  // r_knee
    {-0.090000, -0.860000, 0.000000},  // r_ankle
}};
inline constexpr std::array<double, 6> kStandHead = {0.0, 0.0, 1.0, 0.0, 1.0, 0.0};

inline constexpr std::array<std::array<double, 3>, 15> kSitBody = {{
    {0.000000, 0.050000, 0.000000},     // pelvis
    {0.000000, 0.567151, -0.054355},    // neck
    {0.000000, 0.835672, -0.082577},    // head
    {0.180000, 0.537316, -0.051219},    // l_shoulder
    {0.224463, 0.300764, 0.110540},     // l_elbow
    {0.237664, 0.252302, 0.365643},     // l_wrist
    {-0.180000, 0.537316, -0.051219},   // r_shoulder
    {-0.224463, 0.300764, 0.110540},    // r_elbow
    {-0.237664, 0.252302, 0.365643},    // r_wrist
    {0.090000, 0.000000, 0.000000},     // l_hip
    {0.090000, 0.000000, 0.440000},     // l_knee
    {0.133902, -0.417699, 0.440000},    // l_ankle
    {-0.090000, 0.000000, 0.000000},    // r_hip
    {-0.090000, 0.000000, 0.440000},    // r_knee
    {-0.133902, -0.417699, 0.440000},   // r_ankle
}};
inline constexpr std::array<double, 6> kSitHead = {0.0, 0.104528, 0.994522, 0.0, 0.994522, -0.104528};

}  // namespace egospan::baseline_data
