#pragma once

// End-to-end orchestration: mic spectra -> linear separation -> per-source
// noise estimation (smoothed spectra published before any leakage term is
// read) -> post-filter -> time-domain outputs. Frame-sequential by design;
// a single-channel (eta = 0) shadow filter runs alongside for comparison.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arraysep/lss.hpp"
#include "arraysep/metrics.hpp"
#include "arraysep/noise.hpp"
#include "arraysep/postfilter.hpp"
#include "arraysep/stft.hpp"

namespace arraysep {

struct PipelineConfig {
  FrameConfig frame;
  PostfilterConfig post;

  void validate() const {
    frame.validate();
    post.validate();
  }
};

class Pipeline {
 public:
  Pipeline(ArrayScene scene, PipelineConfig cfg)
      : scene_(std::move(scene)), cfg_(cfg) {
    scene_.validate();
    cfg_.validate();
    bank_ = build_separation_bank(scene_, cfg_.frame);
    const std::size_t m = scene_.num_sources();
    smoothed_.resize(m);
    mcra_.resize(m);
    for (auto& st : mcra_) st.cfg = cfg_.post.mcra;
    gain_main_.resize(m);
    gain_onech_.resize(m);
  }

  struct FrameOutput {
    SpectralFrame lss;       // separator output Y
    SpectralFrame enhanced;  // proposed post-filter output X
    SpectralFrame onech;     // stationary-noise-only baseline output
  };

  std::size_t num_sources() const { return scene_.num_sources(); }
  std::size_t num_mics() const { return scene_.num_mics(); }
  const SeparationBank& separation_bank() const { return bank_; }
  std::size_t frames_processed() const { return frame_; }

  FrameOutput process_frame(const SpectralFrame& mic) {
    if (mic.num_channels() != scene_.num_mics())
      throw std::invalid_argument("process_frame: mic channel count mismatch");
    FrameOutput out;
    out.lss = separate(mic, bank_);
    const std::size_t m = num_sources();
    const std::size_t bins = out.lss.num_bins();

    std::vector<std::vector<double>> power(m, std::vector<double>(bins));
    for (std::size_t s = 0; s < m; ++s)
      for (std::size_t k = 0; k < bins; ++k)
        power[s][k] = std::norm(out.lss.channels[s][k]);

    // all smoothed spectra for this frame are published first
    for (std::size_t s = 0; s < m; ++s)
      smoothed_[s].update(power[s], cfg_.post.alpha_smooth);

    out.enhanced.frame_index = mic.frame_index;
    out.onech.frame_index = mic.frame_index;
    out.enhanced.channels.resize(m);
    out.onech.channels.resize(m);
    PostfilterConfig onech_cfg = cfg_.post;
    onech_cfg.eta = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
      mcra_[s].update(power[s]);
      const auto leak = leakage_estimate(smoothed_, s, cfg_.post.eta);
      const NoiseEstimate noise = total_noise(mcra_[s].lambda_stat, leak);
      const auto q_hat =
          a_priori_speech_absence(smoothed_[s].s, mcra_[s].lambda_stat, cfg_.post);
      const auto g_main =
          postfilter_step(gain_main_[s], power[s], noise.total, q_hat, cfg_.post);
      const auto g_onech =
          postfilter_step(gain_onech_[s], power[s], noise.stat, q_hat, onech_cfg);
      out.enhanced.channels[s] = apply_gain(out.lss.channels[s], g_main);
      out.onech.channels[s] = apply_gain(out.lss.channels[s], g_onech);
    }
    ++frame_;
    return out;
  }

  struct RunOutput {
    std::vector<std::vector<double>> lss;       // per source
    std::vector<std::vector<double>> onech;     // per source
    std::vector<std::vector<double>> enhanced;  // per source
    std::size_t regularized_bins = 0;
    std::size_t frames = 0;
  };

  // Whole-file processing of N equal-length mic signals.
  RunOutput run(std::span<const std::vector<double>> mic_signals) {
    const auto mic_frames = analyze_multichannel(mic_signals, cfg_.frame);
    std::vector<std::vector<SpectralFrame>> stage(3);
    for (const auto& mf : mic_frames) {
      FrameOutput fo = process_frame(mf);
      stage[0].push_back(std::move(fo.lss));
      stage[1].push_back(std::move(fo.onech));
      stage[2].push_back(std::move(fo.enhanced));
    }
    RunOutput out;
    out.frames = mic_frames.size();
    for (bool r : bank_.regularized) out.regularized_bins += r ? 1 : 0;
    const std::size_t m = num_sources();
    out.lss.resize(m);
    out.onech.resize(m);
    out.enhanced.resize(m);
    for (std::size_t s = 0; s < m; ++s) {
      out.lss[s] = synthesize(stage[0], cfg_.frame, s);
      out.onech[s] = synthesize(stage[1], cfg_.frame, s);
      out.enhanced[s] = synthesize(stage[2], cfg_.frame, s);
    }
    return out;
  }

 private:
  ArrayScene scene_;
  PipelineConfig cfg_;
  SeparationBank bank_;
  std::vector<SmoothedSpectrum> smoothed_;
  std::vector<McraState> mcra_;
  std::vector<GainState> gain_main_;
  std::vector<GainState> gain_onech_;
  std::size_t frame_ = 0;
};

// Four-row stage comparison against the clean references: raw first
// microphone, separator output, single-channel baseline, proposed filter.
// Signals are trimmed by one frame at each end before either metric.
inline std::vector<StageMetrics> evaluate_stages(
    std::span<const double> mic_first_channel,
    std::span<const std::vector<double>> references, const Pipeline::RunOutput& run,
    const FrameConfig& cfg, const SegSnrOptions& seg_opt = {}) {
  const std::size_t m = references.size();
  if (run.lss.size() != m)
    throw std::invalid_argument("evaluate_stages: reference count mismatch");
  std::size_t common = mic_first_channel.size();
  for (const auto& r : references) common = std::min(common, r.size());
  for (std::size_t s = 0; s < m; ++s)
    common = std::min({common, run.lss[s].size(), run.onech[s].size(),
                       run.enhanced[s].size()});
  if (common < 3 * cfg.frame_len)
    throw std::invalid_argument("evaluate_stages: signals too short to trim");
  const std::size_t lo = cfg.frame_len;
  const std::size_t span_len = common - 2 * cfg.frame_len;

  auto trimmed = [&](std::span<const double> x) {
    return std::vector<double>(x.begin() + std::ptrdiff_t(lo),
                               x.begin() + std::ptrdiff_t(lo + span_len));
  };

  std::vector<StageMetrics> stages(4);
  stages[0].name = "mic_input";
  stages[1].name = "lss";
  stages[2].name = "postfilter_1ch";
  stages[3].name = "postfilter";
  for (std::size_t s = 0; s < m; ++s) {
    const auto ref = trimmed(references[s]);
    const auto ref_frames = analyze(ref, cfg);
    const double eps = default_lsd_epsilon(ref_frames);
    const std::vector<std::vector<double>> est = {
        trimmed(mic_first_channel), trimmed(run.lss[s]), trimmed(run.onech[s]),
        trimmed(run.enhanced[s])};
    for (std::size_t stage = 0; stage < 4; ++stage) {
      const auto est_frames = analyze(est[stage], cfg);
      SourceMetrics sm;
      sm.lsd_db = lsd(ref_frames, est_frames, eps);
      sm.segsnr_db = segsnr(ref, est[stage], seg_opt);
      stages[stage].per_source.push_back(sm);
    }
  }
  return stages;
}

}  // namespace arraysep
