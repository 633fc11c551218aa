#pragma once

namespace bhflow {

// The four plasma features with per-feature validity flags.
struct PlasmaFeatures {
    double pattern_speed = 0.0;   // rad/frame, sign = rotation direction
    double pitch_angle = 0.0;     // radians
    double asymmetry = 0.0;       // A/C >= 0
    double rotation_slope = 0.0;  // slope of pattern speed vs (r/r_ring - 1)
    bool flag_omega = true;
    bool flag_pitch = true;
    bool flag_asym = true;
    bool flag_slope = true;
};

}  // namespace bhflow
