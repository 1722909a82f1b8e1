#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "ttk/features.hpp"
#include "ttk/metrics.hpp"
#include "ttk/pipeline.hpp"
#include "ttk/segmentation.hpp"

namespace py = pybind11;
using namespace ttk;

namespace {

// JSON documents cross the boundary as strings; the package wraps them.
std::string segment_wrapper(const std::string& corpus, const std::string& out, double gap_ms, double min_ipu_ms,
                            double overlap_grace_ms, double train_ratio, double val_ratio, double test_ratio,
                            uint64_t seed, bool stratified) {
  pipeline::SegmentOptions opts;
  opts.gap_ms = gap_ms;
  opts.min_ipu_ms = min_ipu_ms;
  opts.overlap_grace_ms = overlap_grace_ms;
  opts.train_ratio = train_ratio;
  opts.val_ratio = val_ratio;
  opts.test_ratio = test_ratio;
  opts.seed = seed;
  opts.stratify_by_session = stratified;
  return pipeline::segment_command(corpus, opts, out);
}

std::string train_vqvae_wrapper(const std::string& turns, const std::string& corpus, const std::string& out,
                                bool semantic, int epochs, int batch_size, double lr, int hidden, int embed_dim,
                                int codebook, double beta, double window_s, double hop_s, uint64_t seed) {
  pipeline::VqvaeTrainOptions opts;
  opts.semantic = semantic;
  opts.epochs = epochs;
  opts.batch_size = batch_size;
  opts.lr = lr;
  opts.hidden = hidden;
  opts.embed_dim = embed_dim;
  opts.codebook_size = codebook;
  opts.beta = beta;
  opts.window_s = window_s;
  opts.hop_s = hop_s;
  opts.seed = seed;
  return pipeline::train_vqvae_command(turns, corpus, opts, out);
}

std::string train_wrapper(const std::string& config_json, const std::string& out) {
  auto cfg = pipeline::parse_train_config(config_json);
  return pipeline::train_command(cfg, out);
}

std::vector<py::dict> build_ipus_wrapper(const std::vector<std::tuple<std::string, double, double>>& words,
                                         double gap_s) {
  corpus::SpeakerTrack track;
  track.speaker_id = "spk";
  for (const auto& [text, onset, offset] : words) track.words.push_back({text, onset, offset});
  std::vector<py::dict> out;
  for (const auto& ipu : seg::build_ipus(track, gap_s)) {
    py::dict d;
    d["onset"] = ipu.onset;
    d["offset"] = ipu.offset;
    d["n_words"] = ipu.words.size();
    out.push_back(d);
  }
  return out;
}

py::dict metrics_wrapper(const std::vector<int>& predictions, const std::vector<int>& labels) {
  auto m = metrics::compute_metrics(predictions, labels);
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["macro_f1"] = m.macro_f1;
  d["f1_hold"] = m.f1_hold;
  d["f1_yield"] = m.f1_yield;
  d["confusion"] = std::vector<std::vector<int64_t>>{{m.confusion[0][0], m.confusion[0][1]},
                                                     {m.confusion[1][0], m.confusion[1][1]}};
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "turn-taking prediction toolkit core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

  m.def("synth", &pipeline::synth_command, py::arg("config_json"), py::arg("sessions"), py::arg("out_dir"),
        "Generate a synthetic benchmark corpus; returns the manifest JSON.");
  m.def("segment", &segment_wrapper, py::arg("corpus"), py::arg("out"), py::arg("gap_ms") = 200.0,
        py::arg("min_ipu_ms") = 300.0, py::arg("overlap_grace_ms") = 0.0, py::arg("train_ratio") = 0.70,
        py::arg("val_ratio") = 0.10, py::arg("test_ratio") = 0.20, py::arg("seed") = 0,
        py::arg("stratified") = false, "Segment a corpus into labeled turns; returns a summary JSON.");
  m.def("stats", [](const std::string& turns) { return pipeline::stats_command(turns).json; }, py::arg("turns"));
  m.def("stats_table", [](const std::string& turns) { return pipeline::stats_command(turns).text; }, py::arg("turns"));
  m.def("train_vqvae", &train_vqvae_wrapper, py::arg("turns"), py::arg("corpus"), py::arg("out"),
        py::arg("semantic") = true, py::arg("epochs") = 120, py::arg("batch_size") = 512, py::arg("lr") = 3e-4,
        py::arg("hidden") = 256, py::arg("embed_dim") = 256, py::arg("codebook") = 256, py::arg("beta") = 0.25,
        py::arg("window_s") = 2.0, py::arg("hop_s") = 0.5, py::arg("seed") = 0,
        "Train the gesture tokenizer; returns the training log JSON.");
  m.def("tokenize", &pipeline::tokenize_command, py::arg("model"), py::arg("turns"), py::arg("corpus"),
        py::arg("window_s") = 4.0, py::arg("out") = "tokens.jsonl");
  m.def("train", &train_wrapper, py::arg("config_json"), py::arg("out") = "",
        "Train/evaluate turn models over seeds; returns the report JSON.");
  m.def("evaluate", &pipeline::evaluate_command, py::arg("model"), py::arg("turns"), py::arg("corpus"),
        py::arg("split") = "test", py::arg("out") = "");
  m.def("compare", &pipeline::compare_command, py::arg("a"), py::arg("b"), py::arg("iterations") = 10000,
        py::arg("seed") = 0);
  m.def("analyze", &pipeline::analyze_command, py::arg("model"), py::arg("vqvae"), py::arg("turns"),
        py::arg("corpus"), py::arg("out_dir"));

  m.def("embed_text_hashed",
        [](const std::vector<std::string>& tokens, int dim) { return feat::embed_text_hashed(tokens, dim).values; },
        py::arg("tokens"), py::arg("dim") = 384);
  m.def("audio_spectral_features",
        [](const std::vector<double>& samples, double rate, int bands) {
          feat::AudioConfig cfg;
          cfg.bands = bands;
          return feat::audio_spectral_features(samples, rate, cfg).values;
        },
        py::arg("samples"), py::arg("sample_rate_hz"), py::arg("bands") = 26);
  m.def("build_ipus", &build_ipus_wrapper, py::arg("words"), py::arg("gap_s") = 0.200,
        "Group (text, onset, offset) words into inter-pausal units.");
  m.def("compute_metrics", &metrics_wrapper, py::arg("predictions"), py::arg("labels"));
  m.def("significance", &metrics::significance, py::arg("preds_a"), py::arg("preds_b"), py::arg("labels"),
        py::arg("iterations") = 10000, py::arg("seed") = 0);

#ifdef TTK_VERSION
  m.attr("__version__") = TTK_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
