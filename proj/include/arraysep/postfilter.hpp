#pragma once

// Loudness-domain MMSE spectral gain: a posteriori/a priori SNR, the
// hypergeometric gain under speech presence, speech-presence probability,
// and the final soft gain applied to each separated channel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "arraysep/noise.hpp"
#include "arraysep/specfun.hpp"
#include "arraysep/stft.hpp"

namespace arraysep {

struct PostfilterConfig {
  double alpha = 0.5;         // amplitude exponent; 1/2 = loudness domain
  double alpha_prior = 0.92;  // decision-directed memory
  double alpha_smooth = 0.7;  // smoothed-spectrum memory alpha_s
  double eta = 0.1;           // leakage factor, power scale (-10 dB)
  double g_min = 0.0;         // floor gain when speech is absent
  double g_max = 1.0;         // gain ceiling

  // speech-absence estimator: likelihood ratio zeta = S / lambda_stat mapped
  // through a log-linear ramp between zeta_min and zeta_max
  double zeta_min = 1.0;
  double zeta_max = 10.0;
  std::size_t local_window = 3;    // bins, odd
  std::size_t global_window = 31;  // bins, odd
  double q_clamp_lo = 0.02;
  double q_clamp_hi = 0.98;

  double lambda_floor_rel = 1e-12;  // of the frame-mean input power

  McraConfig mcra;

  void validate() const {
    if (!(alpha > 0.0) || alpha > 2.0)
      throw std::invalid_argument("PostfilterConfig: alpha must be in (0, 2]");
    if (!(alpha_prior >= 0.0) || alpha_prior >= 1.0)
      throw std::invalid_argument("PostfilterConfig: alpha_prior must be in [0, 1)");
    if (!(alpha_smooth >= 0.0) || alpha_smooth >= 1.0)
      throw std::invalid_argument("PostfilterConfig: alpha_smooth must be in [0, 1)");
    if (!(eta >= 0.0) || eta >= 1.0)
      throw std::invalid_argument("PostfilterConfig: eta must be in [0, 1)");
    if (!(g_min >= 0.0) || g_min >= 1.0)
      throw std::invalid_argument("PostfilterConfig: g_min must be in [0, 1)");
    if (!(g_max > 0.0))
      throw std::invalid_argument("PostfilterConfig: g_max must be positive");
    if (local_window % 2 == 0 || global_window % 2 == 0)
      throw std::invalid_argument("PostfilterConfig: windows must have odd width");
    if (!(zeta_max > zeta_min) || !(zeta_min > 0.0))
      throw std::invalid_argument("PostfilterConfig: need 0 < zeta_min < zeta_max");
  }
};

// gamma(k) = |Y(k)|^2 / lambda(k), floored at lambda_floor_rel times the
// frame-mean power; zero power maps to gamma = 0 outright.
inline std::vector<double> a_posteriori_snr(std::span<const double> power,
                                            std::span<const double> lambda,
                                            double lambda_floor_rel) {
  if (power.size() != lambda.size())
    throw std::invalid_argument("a_posteriori_snr: size mismatch");
  double mean = 0.0;
  for (double v : power) mean += v;
  mean /= double(std::max<std::size_t>(power.size(), 1));
  const double floor = lambda_floor_rel * mean;
  std::vector<double> gamma(power.size());
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double den = std::max(lambda[k], floor);
    gamma[k] = (power[k] == 0.0 || den == 0.0) ? 0.0 : power[k] / den;
  }
  return gamma;
}

// Decision-directed a priori SNR,
// xi(k,l) = alpha_p G^2(k,l-1) gamma(k,l-1) + (1-alpha_p) max(gamma(k,l)-1, 0).
inline std::vector<double> a_priori_snr(std::span<const double> gain_prev,
                                        std::span<const double> gamma_prev,
                                        std::span<const double> gamma_now,
                                        double alpha_prior) {
  if (gain_prev.size() != gamma_now.size() || gamma_prev.size() != gamma_now.size())
    throw std::invalid_argument("a_priori_snr: size mismatch");
  std::vector<double> xi(gamma_now.size());
  for (std::size_t k = 0; k < xi.size(); ++k)
    xi[k] = alpha_prior * gain_prev[k] * gain_prev[k] * gamma_prev[k] +
            (1.0 - alpha_prior) * std::max(gamma_now[k] - 1.0, 0.0);
  return xi;
}

inline double upsilon_of(double xi, double gamma) { return gamma * xi / (xi + 1.0); }

// Gain under the speech-present hypothesis,
// G_H1 = (sqrt(upsilon)/gamma) [Gamma(1+alpha/2) M(-alpha/2; 1; -upsilon)]^(1/alpha),
// clamped to [0, g_max].
inline double gain_h1(double xi, double gamma, double alpha, double g_max = 1.0) {
  if (!(xi >= 0.0) || !(gamma >= 0.0))
    throw std::invalid_argument("gain_h1: xi and gamma must be nonnegative");
  if (gamma == 0.0) return 0.0;
  const double ups = upsilon_of(xi, gamma);
  if (ups == 0.0) return 0.0;
  const double bracket = gamma_fn(1.0 + alpha / 2.0) * kummer_m(-alpha / 2.0, 1.0, -ups);
  const double g = std::sqrt(ups) / gamma * std::pow(bracket, 1.0 / alpha);
  return std::clamp(g, 0.0, g_max);
}

// p(k) = 1 / (1 + q/(1-q) (1+xi) exp(-upsilon)); q = 0 and q = 1 short-circuit
// to the exact limits, interior values are clamped before the ratio.
inline double speech_presence_probability(double xi, double upsilon, double q_hat,
                                          double q_clamp_lo = 0.02,
                                          double q_clamp_hi = 0.98) {
  if (!(q_hat >= 0.0) || q_hat > 1.0)
    throw std::invalid_argument("speech_presence_probability: q must be in [0, 1]");
  if (q_hat == 0.0) return 1.0;
  if (q_hat == 1.0) return 0.0;
  const double q = std::clamp(q_hat, q_clamp_lo, q_clamp_hi);
  const double odds = q / (1.0 - q) * (1.0 + xi) * std::exp(-upsilon);
  return 1.0 / (1.0 + odds);
}

namespace detail {

// log-linear ramp: 0 at zeta_min and below, 1 at zeta_max and above
inline double activity_ramp(double zeta, double zeta_min, double zeta_max) {
  if (zeta <= zeta_min) return 0.0;
  if (zeta >= zeta_max) return 1.0;
  return std::log(zeta / zeta_min) / std::log(zeta_max / zeta_min);
}

inline std::vector<double> windowed_mean(std::span<const double> x, std::size_t width) {
  const std::size_t half = width / 2;
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(x.size() - 1, k + half);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += x[j];
    out[k] = acc / double(hi - lo + 1);
  }
  return out;
}

}  // namespace detail

// A priori speech-absence probability q(k) = 1 - P_local P_global P_frame,
// built from the ratio zeta = S / lambda_stat at local, wide, and frame level.
inline std::vector<double> a_priori_speech_absence(std::span<const double> smoothed,
                                                   std::span<const double> lambda_stat,
                                                   const PostfilterConfig& cfg) {
  if (smoothed.size() != lambda_stat.size())
    throw std::invalid_argument("a_priori_speech_absence: size mismatch");
  const std::size_t bins = smoothed.size();
  std::vector<double> zeta(bins);
  double frame_mean = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    zeta[k] = smoothed[k] == 0.0
                  ? 0.0
                  : smoothed[k] / std::max(lambda_stat[k], 1e-300);
    frame_mean += zeta[k] / double(bins);
  }
  const double p_frame = frame_mean > cfg.zeta_min ? 1.0 : 0.0;
  const auto local = detail::windowed_mean(zeta, cfg.local_window);
  const auto global = detail::windowed_mean(zeta, cfg.global_window);
  std::vector<double> q(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double p_local = detail::activity_ramp(local[k], cfg.zeta_min, cfg.zeta_max);
    const double p_global = detail::activity_ramp(global[k], cfg.zeta_min, cfg.zeta_max);
    q[k] = 1.0 - p_local * p_global * p_frame;
  }
  return q;
}

// G = [p G_H1^alpha + (1-p) G_min^alpha]^(1/alpha); reduces to p^2 G_H1 when
// alpha = 1/2 and G_min = 0.
inline double final_gain(double p, double g_h1, double alpha, double g_min) {
  if (!(p >= 0.0) || p > 1.0)
    throw std::invalid_argument("final_gain: p must be in [0, 1]");
  if (!(g_h1 >= 0.0)) throw std::invalid_argument("final_gain: gain must be nonnegative");
  const double mixed =
      p * std::pow(g_h1, alpha) + (1.0 - p) * std::pow(g_min, alpha);
  return std::pow(mixed, 1.0 / alpha);
}

// X(k) = G(k) Y(k); real gains preserve phase.
inline std::vector<cplx> apply_gain(std::span<const cplx> y, std::span<const double> g) {
  if (y.size() != g.size()) throw std::invalid_argument("apply_gain: size mismatch");
  std::vector<cplx> x(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) x[k] = g[k] * y[k];
  return x;
}

// Frame-sequential gain state for one separated channel. The decision-directed
// recursion makes updates strictly ordered per source.
struct GainState {
  std::vector<double> xi;
  std::vector<double> gamma;
  std::vector<double> upsilon;
  std::vector<double> g_h1;
  std::vector<double> p;
  std::vector<double> q_hat;
  std::vector<double> g_h1_prev;
  std::vector<double> gamma_prev;
  std::size_t frame = 0;
};

// One frame of the suppression rule for one source. q_hat is shared between
// configurations (it depends only on S and lambda_stat), so it is an input.
inline std::vector<double> postfilter_step(GainState& st, std::span<const double> power,
                                           std::span<const double> lambda_total,
                                           std::span<const double> q_hat,
                                           const PostfilterConfig& cfg) {
  const std::size_t bins = power.size();
  if (lambda_total.size() != bins || q_hat.size() != bins)
    throw std::invalid_argument("postfilter_step: size mismatch");
  st.gamma = a_posteriori_snr(power, lambda_total, cfg.lambda_floor_rel);
  if (st.frame == 0) {
    st.xi.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) st.xi[k] = std::max(st.gamma[k] - 1.0, 0.0);
  } else {
    st.xi = a_priori_snr(st.g_h1_prev, st.gamma_prev, st.gamma, cfg.alpha_prior);
  }
  st.upsilon.resize(bins);
  st.g_h1.resize(bins);
  st.p.resize(bins);
  st.q_hat.assign(q_hat.begin(), q_hat.end());
  std::vector<double> gain(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    st.upsilon[k] = upsilon_of(st.xi[k], st.gamma[k]);
    st.g_h1[k] = gain_h1(st.xi[k], st.gamma[k], cfg.alpha, cfg.g_max);
    st.p[k] = speech_presence_probability(st.xi[k], st.upsilon[k], q_hat[k],
                                          cfg.q_clamp_lo, cfg.q_clamp_hi);
    gain[k] = std::min(final_gain(st.p[k], st.g_h1[k], cfg.alpha, cfg.g_min), cfg.g_max);
  }
  st.g_h1_prev = st.g_h1;
  st.gamma_prev = st.gamma;
  ++st.frame;
  return gain;
}

}  // namespace arraysep
