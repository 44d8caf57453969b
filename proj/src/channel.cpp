#include "uavp/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace uavp {

void ChannelSpec::validate() const {
  if (phi <= 0.0) throw std::invalid_argument("channel: phi must be > 0");
  if (theta <= 0.0 || theta >= M_PI / 2)
    throw std::invalid_argument("channel: theta must be in (0, pi/2)");
  if (rician_kappa < 0.0) throw std::invalid_argument("channel: kappa must be >= 0");
}

double draw_fading(const ChannelSpec& spec, RngStream& rng) {
  const double k = spec.rician_kappa;
  const double los_mean = std::sqrt(k / (1.0 + k));
  const double comp_sd = std::sqrt(1.0 / (2.0 + 2.0 * k));
  const double re = rng.normal(los_mean, comp_sd);
  const double im = rng.normal(0.0, comp_sd);
  return re * re + im * im;
}

double channel_gain(Vec2 uav_xy, double uav_altitude, Vec2 vue,
                    const ChannelSpec& spec, double fading_power) {
  const double dx = uav_xy.x - vue.x;
  const double dy = uav_xy.y - vue.y;
  const double d2 = dx * dx + dy * dy + uav_altitude * uav_altitude;
  if (d2 <= 0.0) throw std::domain_error("channel: degenerate geometry (D = 0)");
  return spec.phi * fading_power / (spec.theta * spec.theta * d2);
}

namespace {

double spectral_efficiency(double gain, const ExperimentConfig& cfg) {
  const double snr = cfg.tx_power * gain / (cfg.noise_psd * cfg.bandwidth);
  return std::log2(1.0 + snr);
}

}  // namespace

double slot_delay(double image_bits, int vue_count, double gain,
                  const ExperimentConfig& cfg) {
  if (image_bits <= 0.0) throw std::domain_error("slot_delay: image size must be > 0");
  if (vue_count <= 0) throw std::domain_error("slot_delay: VUE count must be > 0");
  if (cfg.bandwidth <= 0.0) throw std::domain_error("slot_delay: bandwidth must be > 0");
  if (gain < 0.0) throw std::domain_error("slot_delay: negative gain");
  if (gain == 0.0) return std::numeric_limits<double>::infinity();
  return image_bits * vue_count / (cfg.bandwidth * spectral_efficiency(gain, cfg));
}

double normalized_slot_delay(double gain, const ExperimentConfig& cfg) {
  if (gain < 0.0) throw std::domain_error("slot_delay: negative gain");
  if (gain == 0.0) return std::numeric_limits<double>::infinity();
  return cfg.min_image_bits() / (cfg.bandwidth * spectral_efficiency(gain, cfg));
}

}  // namespace uavp
