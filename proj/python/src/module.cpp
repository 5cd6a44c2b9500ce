#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mirflex/audio.h"
#include "mirflex/error.h"
#include "mirflex/evaluation.h"
#include "mirflex/framework.h"
#include "mirflex/harmony.h"
#include "mirflex/plugin.h"
#include "mirflex/rhythm.h"
#include "mirflex/vocals.h"

namespace py = pybind11;
using namespace mirflex;

namespace {

// Reports and score tables cross the boundary as parsed Python objects.
py::object from_json_text(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

AudioBuffer buffer_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> samples,
                              int sample_rate_hz) {
  if (samples.ndim() != 1) throw Error(ErrorKind::kInvalidArgument, "samples must be one-dimensional");
  std::vector<float> v(samples.data(), samples.data() + samples.size());
  return AudioBuffer(std::move(v), sample_rate_hz);
}

py::array_t<float> samples_array(const AudioBuffer& buf) {
  auto s = buf.samples();
  return py::array_t<float>(static_cast<py::ssize_t>(s.size()), s.data());
}

std::vector<ChordSegment> segments_from(const std::vector<std::tuple<double, double, std::string>>& rows) {
  std::vector<ChordSegment> out;
  for (const auto& [start, end, label] : rows) out.push_back({start, end, ChordLabel::parse(label), 1.0});
  return out;
}

py::dict key_dict(const KeyEstimate& k) {
  py::dict d;
  d["key"] = k.key.to_string();
  d["confidence"] = k.confidence;
  d["scores"] = std::vector<double>(k.scores.begin(), k.scores.end());
  return d;
}

py::dict candidate_dict(const CandidateEntry& e) {
  py::dict d;
  d["task"] = e.task;
  d["approach"] = e.approach;
  d["dataset"] = e.dataset;
  d["metric_name"] = e.metric_name;
  d["value"] = e.value;
  d["source_table"] = e.source_table;
  d["note"] = e.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Music feature extraction: key, chords, tempo and beats, vocals.";

  static py::exception<Error> error_type(m, "MirflexError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // args: (message, kind, detail)
      py::tuple args = py::make_tuple(e.what(), to_string(e.kind()), e.detail());
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  m.attr("CANONICAL_SAMPLE_RATE") = kCanonicalSampleRate;

  py::class_<AudioBuffer>(m, "AudioBuffer")
      .def(py::init(&buffer_from_array), py::arg("samples"), py::arg("sample_rate_hz"))
      .def_property_readonly("samples", &samples_array)
      .def_property_readonly("sample_rate_hz", &AudioBuffer::sample_rate_hz)
      .def_property_readonly("duration_sec", &AudioBuffer::duration_sec)
      .def("__len__", &AudioBuffer::size)
      .def("__repr__", [](const AudioBuffer& b) {
        return "<AudioBuffer " + std::to_string(b.size()) + " samples @ " +
               std::to_string(b.sample_rate_hz()) + " Hz>";
      });

  m.def("decode_wav", &decode_wav, py::arg("path"));
  m.def("write_wav", [](const std::string& path, const AudioBuffer& buf) { write_wav(path, buf); },
        py::arg("path"), py::arg("audio"));
  m.def("resample", &resample, py::arg("audio"), py::arg("target_hz"));
  m.def("synth_tone",
        [](const std::vector<double>& freqs, double duration, int sr) { return synth_tone(freqs, duration, sr); },
        py::arg("freqs_hz"), py::arg("duration_sec"), py::arg("sample_rate_hz") = kCanonicalSampleRate);
  m.def("synth_click_track",
        [](double bpm, double duration, int sr, int meter, double accent_gain) {
          auto t = synth_click_track(bpm, duration, sr, meter, accent_gain);
          return py::make_tuple(t.audio, t.beat_times, t.accented);
        },
        py::arg("bpm"), py::arg("duration_sec"), py::arg("sample_rate_hz") = kCanonicalSampleRate,
        py::arg("meter") = 4, py::arg("accent_gain") = 1.0,
        "Returns (audio, beat_times, accented).");

  m.def("detect_key",
        [](const AudioBuffer& audio) {
          AnalysisContext ctx(resample(audio, kCanonicalSampleRate), "");
          return key_dict(detect_key(ctx.chroma()));
        },
        py::arg("audio"));
  m.def("detect_chords",
        [](const AudioBuffer& audio) {
          AnalysisContext ctx(resample(audio, kCanonicalSampleRate), "");
          py::list out;
          for (const auto& s : detect_chords(ctx.chroma(), {}, ctx.duration_sec())) {
            out.append(py::make_tuple(s.start_sec, s.end_sec, s.label.to_string(), s.confidence));
          }
          return out;
        },
        py::arg("audio"), "List of (start_sec, end_sec, label, confidence).");
  m.def("estimate_tempo",
        [](const AudioBuffer& audio) {
          AnalysisContext ctx(resample(audio, kCanonicalSampleRate), "");
          auto t = estimate_tempo(ctx.onsets());
          py::dict d;
          d["bpm"] = t.bpm;
          d["strength"] = t.strength;
          d["octave_bpm"] = t.octave_bpm;
          return d;
        },
        py::arg("audio"));
  m.def("track_beats",
        [](const AudioBuffer& audio, int meter) {
          AnalysisContext ctx(resample(audio, kCanonicalSampleRate), "");
          const auto& env = ctx.onsets();
          const double bpm = estimate_tempo(env).bpm;
          auto beats = track_beats(env, bpm);
          auto grid = infer_downbeats(beats, env, meter, bpm);
          return py::make_tuple(bpm, grid.beats, grid.downbeat_flags);
        },
        py::arg("audio"), py::arg("meter") = 4, "Returns (bpm, beat_times, downbeat_flags).");
  m.def("vocal_features", [](const AudioBuffer& audio) { return vocal_features(resample(audio, kCanonicalSampleRate)); },
        py::arg("audio"));
  m.def("classify_vocals",
        [](const FeatureMap& features) {
          auto d = classify_vocals(features);
          return py::make_tuple(d.label(), d.score);
        },
        py::arg("features"), "Returns (label, score) under the default weights.");

  m.def("extractor_ids", [] { return builtin_registry().ids(); });
  m.def("run_pipeline",
        [](const std::vector<std::string>& inputs, const std::vector<std::string>& extractors, int workers,
           const std::vector<std::vector<std::string>>& plugins) {
          Registry reg = builtin_registry();
          for (const auto& cmd : plugins) register_plugin(reg, cmd);
          PipelineConfig cfg;
          cfg.input_paths = inputs;
          for (const auto& id : extractors) cfg.enabled_extractors.push_back({id, {}});
          cfg.workers = workers;
          PipelineReport rep;
          {
            py::gil_scoped_release release;
            rep = run_pipeline(cfg, reg);
          }
          return from_json_text(serialize_report(rep));
        },
        py::arg("inputs"), py::arg("extractors"), py::arg("workers") = 1,
        py::arg("plugins") = std::vector<std::vector<std::string>>{},
        "Runs the pipeline and returns the report as a dict. `plugins` holds commands of external "
        "extractors to register first.");

  m.def("key_score",
        [](const std::string& pred, const std::string& truth, bool exact) {
          return key_score(KeyLabel::parse(pred), KeyLabel::parse(truth),
                           exact ? KeyScoring::kExact : KeyScoring::kWeighted);
        },
        py::arg("predicted"), py::arg("truth"), py::arg("exact") = false);
  m.def("wcsr",
        [](const std::vector<std::tuple<double, double, std::string>>& pred,
           const std::vector<std::tuple<double, double, std::string>>& truth, double total) {
          return wcsr(segments_from(pred), segments_from(truth), total);
        },
        py::arg("predicted"), py::arg("truth"), py::arg("total_duration_sec") = -1.0);
  m.def("beat_f_measure",
        [](const std::vector<double>& pred, const std::vector<double>& truth, double window) {
          return beat_f_measure(pred, truth, window);
        },
        py::arg("predicted"), py::arg("truth"), py::arg("window_sec") = kDefaultBeatWindowSec);
  m.def("tempo_accuracy", &tempo_accuracy, py::arg("predicted_bpm"), py::arg("truth_bpm"),
        py::arg("tolerance") = kDefaultTempoTolerance, py::arg("allow_octave") = false);

  m.def("catalog_tasks", &catalog_tasks);
  m.def("catalog_query",
        [](const std::string& task) {
          py::list out;
          for (const auto& e : catalog_query(task)) out.append(candidate_dict(e));
          return out;
        },
        py::arg("task"));
  m.def("evaluate",
        [](const std::string& report_json, const std::string& annotations_dir) {
          auto table = evaluate_report(parse_report(report_json), load_annotations(annotations_dir));
          return from_json_text(to_canonical_json(score_table_to_json(table)));
        },
        py::arg("report_json"), py::arg("annotations_dir"));
}
