// Built-in extractors: template key, Viterbi chords, DP rhythm and the
// heuristic vocals scorer.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mirflex/error.h"
#include "mirflex/framework.h"
#include "mirflex/harmony.h"
#include "mirflex/rhythm.h"
#include "mirflex/vocals.h"

namespace mirflex {
namespace {

std::string fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

class KeyExtractor : public Extractor {
 public:
  std::vector<FeatureRecord> extract(AnalysisContext& ctx) override {
    KeyEstimate est = detect_key(ctx.chroma());
    FeatureRecord r;
    r.feature = "key";
    r.start_sec = 0.0;
    r.end_sec = ctx.duration_sec();
    r.label = est.key.to_string();
    r.confidence = est.confidence;
    r.latent = std::vector<double>(est.scores.begin(), est.scores.end());
    r.metadata["best_score"] = fixed(est.best_score);
    r.metadata["second_score"] = fixed(est.second_score);
    return {r};
  }
};

class ChordExtractor : public Extractor {
 public:
  explicit ChordExtractor(ChordParams params) : params_(params) {}

  std::vector<FeatureRecord> extract(AnalysisContext& ctx) override {
    const Chromagram& chroma = ctx.chroma();
    auto segments = detect_chords(chroma, params_, ctx.duration_sec());
    std::vector<FeatureRecord> out;
    for (const auto& seg : segments) {
      FeatureRecord r;
      r.feature = "chord";
      r.start_sec = seg.start_sec;
      r.end_sec = seg.end_sec;
      r.label = seg.label.to_string();
      r.confidence = seg.confidence;
      // Latent: unit-sum mean chroma over the frames inside the segment.
      std::vector<double> mean(12, 0.0);
      for (std::size_t t = 0; t < chroma.frames(); ++t) {
        double time = chroma.frame_time(t);
        if (time < seg.start_sec || time >= seg.end_sec) continue;
        for (int pc = 0; pc < 12; ++pc) mean[pc] += chroma.energies(t, pc);
      }
      double total = 0.0;
      for (double v : mean) total += v;
      if (total > 0.0) {
        for (double& v : mean) v /= total;
      }
      r.latent = std::move(mean);
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  ChordParams params_;
};

class RhythmExtractor : public Extractor {
 public:
  RhythmExtractor(TempoParams tempo, BeatTrackParams beats, int meter)
      : tempo_(tempo), beats_(beats), meter_(meter) {}

  std::vector<FeatureRecord> extract(AnalysisContext& ctx) override {
    const OnsetEnvelope& env = ctx.onsets();
    TempoEstimate tempo = estimate_tempo(env, tempo_);
    const double duration = ctx.duration_sec();

    std::vector<double> beats;
    for (double t : track_beats(env, tempo.bpm, beats_)) {
      double clamped = std::clamp(t, 0.0, duration);
      if (beats.empty() || clamped > beats.back()) beats.push_back(clamped);
    }

    std::vector<FeatureRecord> out;
    FeatureRecord tr;
    tr.feature = "tempo";
    tr.start_sec = 0.0;
    tr.end_sec = duration;
    tr.label = fixed(tempo.bpm, 1);
    tr.confidence = std::clamp(tempo.strength, 0.0, 1.0);
    double peak = 0.0;
    for (const auto& p : tempo.tempogram) peak = std::max(peak, p.score);
    std::vector<double> latent;
    for (const auto& p : tempo.tempogram) latent.push_back(peak > 0.0 ? p.score / peak : 0.0);
    tr.latent = std::move(latent);
    tr.metadata["bpm"] = fixed(tempo.bpm);
    tr.metadata["octave_bpm"] = fixed(tempo.octave_bpm, 1);
    tr.metadata["meter"] = std::to_string(meter_);
    out.push_back(std::move(tr));

    std::vector<bool> flags(beats.size(), false);
    if (beats.size() >= static_cast<std::size_t>(meter_)) {
      flags = infer_downbeats(beats, env, meter_, tempo.bpm).downbeat_flags;
    }
    for (std::size_t i = 0; i < beats.size(); ++i) {
      FeatureRecord br;
      br.feature = "beat";
      br.start_sec = br.end_sec = beats[i];
      br.label = "beat";
      long f = std::lround((beats[i] - env.frame_offset_sec) / env.hop_sec);
      f = std::clamp<long>(f, 0, static_cast<long>(env.size()) - 1);
      br.confidence = std::clamp(env.strength[f], 0.0, 1.0);
      br.metadata["downbeat"] = flags[i] ? "true" : "false";
      out.push_back(std::move(br));
    }
    return out;
  }

 private:
  TempoParams tempo_;
  BeatTrackParams beats_;
  int meter_;
};

class VocalsExtractor : public Extractor {
 public:
  VocalsExtractor(FeatureMap weights, double threshold)
      : weights_(std::move(weights)), threshold_(threshold) {}

  std::vector<FeatureRecord> extract(AnalysisContext& ctx) override {
    const AudioBuffer& audio = ctx.audio();
    FeatureMap features = vocal_features(audio);
    VocalsDecision d = classify_vocals(features, weights_, threshold_);
    FeatureRecord r;
    r.feature = "vocals";
    r.start_sec = 0.0;
    r.end_sec = ctx.duration_sec();
    r.label = d.label();
    r.confidence = 1.0 / (1.0 + std::exp(-(d.score - threshold_)));
    std::vector<double> latent;
    for (const auto& [name, value] : features) {
      r.metadata[name] = fixed(value);
      latent.push_back(value);
    }
    r.metadata["score"] = fixed(d.score);
    r.latent = std::move(latent);
    return {r};
  }

 private:
  FeatureMap weights_;
  double threshold_;
};

}  // namespace

void register_builtin_extractors(Registry& registry) {
  registry.register_extractor({kKeyExtractorId, {"key"}, ExtractorKind::kBuiltin, "1.0"},
                              [](const ParamMap& params) -> std::unique_ptr<Extractor> {
                                check_param_keys(params, {}, kKeyExtractorId);
                                return std::make_unique<KeyExtractor>();
                              });

  registry.register_extractor(
      {kChordExtractorId, {"chord"}, ExtractorKind::kBuiltin, "1.0"},
      [](const ParamMap& params) -> std::unique_ptr<Extractor> {
        check_param_keys(params, {"self_transition", "silence_threshold", "emission_floor"},
                         kChordExtractorId);
        ChordParams p;
        p.self_transition = param_number(params, "self_transition", p.self_transition);
        p.silence_threshold = param_number(params, "silence_threshold", p.silence_threshold);
        p.emission_floor = param_number(params, "emission_floor", p.emission_floor);
        if (!(p.self_transition > 0.0 && p.self_transition < 1.0) || !(p.emission_floor > 0.0) ||
            p.silence_threshold < 0.0) {
          throw Error(ErrorKind::kConfigInvalid, "chord parameters out of range");
        }
        return std::make_unique<ChordExtractor>(p);
      });

  registry.register_extractor(
      {kRhythmExtractorId, {"tempo", "beat"}, ExtractorKind::kBuiltin, "1.0"},
      [](const ParamMap& params) -> std::unique_ptr<Extractor> {
        check_param_keys(params,
                         {"alpha", "meter", "prior_bpm", "prior_octaves", "subdivision_contrast"},
                         kRhythmExtractorId);
        TempoParams tp;
        tp.prior_bpm = param_number(params, "prior_bpm", tp.prior_bpm);
        tp.prior_octaves = param_number(params, "prior_octaves", tp.prior_octaves);
        tp.subdivision_contrast = param_number(params, "subdivision_contrast", tp.subdivision_contrast);
        BeatTrackParams bp;
        bp.alpha = param_number(params, "alpha", bp.alpha);
        double meter = param_number(params, "meter", 4.0);
        if (meter < 1.0 || meter != std::floor(meter) || !(tp.prior_octaves > 0.0) ||
            !(tp.prior_bpm > 0.0) || bp.alpha < 0.0 || !(tp.subdivision_contrast >= 0.0)) {
          throw Error(ErrorKind::kConfigInvalid, "rhythm parameters out of range");
        }
        return std::make_unique<RhythmExtractor>(tp, bp, static_cast<int>(meter));
      });

  registry.register_extractor(
      {kVocalsExtractorId, {"vocals"}, ExtractorKind::kBuiltin, "1.0"},
      [](const ParamMap& params) -> std::unique_ptr<Extractor> {
        check_param_keys(params,
                         {"threshold", "weight_mod4hz_ratio", "weight_harmonicity",
                          "weight_flatness_mid"},
                         kVocalsExtractorId);
        FeatureMap w = default_vocal_weights();
        for (auto& [name, value] : w) value = param_number(params, "weight_" + name, value);
        double threshold = param_number(params, "threshold", kDefaultVocalThreshold);
        return std::make_unique<VocalsExtractor>(std::move(w), threshold);
      });
}

}  // namespace mirflex
