#pragma once

#include "uavp/rng.hpp"
#include "uavp/scenario.hpp"

namespace uavp {

struct ChannelSpec {
  double phi = 3.24e-4;
  double theta = std::atan(24.0 * std::sqrt(2.0) / 5.0);
  double rician_kappa = std::pow(10.0, 1.2);

  void validate() const;
};

inline ChannelSpec channel_spec(const ExperimentConfig& cfg) {
  return {cfg.channel_phi, cfg.channel_theta, cfg.rician_kappa};
}

struct DelaySample {
  double value = 0.0;  // seconds
  int zone = 0;
  Vec2 uav_position;
  long block_index = 0;
};

// Rician fading power |psi|^2, normalized so E[|psi|^2] = 1:
// line-of-sight power kappa/(1+kappa), diffuse power 1/(1+kappa), i.e.
// Re(psi) ~ N(sqrt(kappa/(1+kappa)), 1/(2+2kappa)) and
// Im(psi) ~ N(0, 1/(2+2kappa)).
double draw_fading(const ChannelSpec& spec, RngStream& rng);

// h = phi * |psi|^2 / (theta * D)^2 with D the UAV-to-VUE Euclidean
// distance. Throws on D = 0.
double channel_gain(Vec2 uav_xy, double uav_altitude, Vec2 vue,
                    const ChannelSpec& spec, double fading_power);

// T = A * V / (W * log2(1 + P h / (N0 W))). Returns +inf for h = 0.
double slot_delay(double image_bits, int vue_count, double gain,
                  const ExperimentConfig& cfg);

// Per-slot delay with the smallest image size and the V factor removed:
// A1 / (W * log2(1 + P h / (N0 W))). Block maxima of this quantity are the
// collected samples; actual delays recover as value * V * A_l / A1.
double normalized_slot_delay(double gain, const ExperimentConfig& cfg);

}  // namespace uavp
