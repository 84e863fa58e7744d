#include "vlrep/serialization.hpp"

#include <fstream>
#include <stdexcept>

namespace vlrep {

namespace {

using nlohmann::json;

std::string strategy_name(Strategy s) {
  return s == Strategy::meta ? "meta" : "joint";
}

Strategy strategy_from(const std::string& name) {
  if (name == "meta") return Strategy::meta;
  if (name == "joint") return Strategy::joint;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string scheme_name(WeightingScheme::Variant v) {
  switch (v) {
    case WeightingScheme::Variant::mlp: return "mlp";
    case WeightingScheme::Variant::focal: return "focal";
    case WeightingScheme::Variant::spl: return "spl";
    case WeightingScheme::Variant::l2rw: return "l2rw";
    case WeightingScheme::Variant::uniform: return "uniform";
  }
  throw std::invalid_argument("unknown weighting variant");
}

WeightingScheme::Variant scheme_from(const std::string& name) {
  if (name == "mlp") return WeightingScheme::Variant::mlp;
  if (name == "focal") return WeightingScheme::Variant::focal;
  if (name == "spl") return WeightingScheme::Variant::spl;
  if (name == "l2rw") return WeightingScheme::Variant::l2rw;
  if (name == "uniform") return WeightingScheme::Variant::uniform;
  throw std::invalid_argument("unknown weighting scheme: " + name);
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::meta: return "meta";
    case Split::test: return "test";
  }
  throw std::invalid_argument("unknown split");
}

Split split_from(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "meta") return Split::meta;
  if (name == "test") return Split::test;
  throw std::invalid_argument("unknown split: " + name);
}

json affine_to_json(const AffineParams& p) {
  return json{{"w", p.w}, {"b", p.b}};
}

AffineParams affine_from_json(const json& j) {
  AffineParams p;
  j.at("w").get_to(p.w);
  j.at("b").get_to(p.b);
  if (p.b.size() != p.w.rows)
    throw std::invalid_argument("affine layer: bias length does not match weight rows");
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Numerics
// ---------------------------------------------------------------------------

void to_json(json& j, const Matrix& m) {
  j = json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

void from_json(const json& j, Matrix& m) {
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  j.at("data").get_to(m.data);
  if (m.data.size() != m.rows * m.cols)
    throw std::invalid_argument("Matrix: data length " + std::to_string(m.data.size()) +
                                " does not equal rows*cols");
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void to_json(json& j, const MarginSchedule& s) {
  j = json{{"a0", s.a0}, {"a1", s.a1}, {"a2", s.a2}};
}

void from_json(const json& j, MarginSchedule& s) {
  s.a0 = j.value("a0", s.a0);
  s.a1 = j.value("a1", s.a1);
  s.a2 = j.value("a2", s.a2);
}

void to_json(json& j, const WeightingScheme& s) {
  j = json{{"variant", scheme_name(s.variant)},
           {"gamma_f", s.gamma_f},
           {"lambda_spl", s.lambda_spl}};
}

void from_json(const json& j, WeightingScheme& s) {
  if (j.contains("variant")) s.variant = scheme_from(j.at("variant").get<std::string>());
  s.gamma_f = j.value("gamma_f", s.gamma_f);
  s.lambda_spl = j.value("lambda_spl", s.lambda_spl);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"alpha", c.alpha},
           {"beta", c.beta},
           {"tau", c.tau},
           {"eta", c.eta},
           {"batch_size", c.batch_size},
           {"meta_batch_size", c.meta_batch_size},
           {"steps", c.steps},
           {"sched", c.sched},
           {"scheme", c.scheme},
           {"strategy", strategy_name(c.strategy)},
           {"seed", c.seed},
           {"d_hidden", c.d_hidden},
           {"d_embed", c.d_embed},
           {"n_classes", c.n_classes},
           {"weightnet_hidden", c.weightnet_hidden},
           {"standardize_loss_input", c.standardize_loss_input}};
}

void from_json(const json& j, TrainConfig& c) {
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.tau = j.value("tau", c.tau);
  c.eta = j.value("eta", c.eta);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.meta_batch_size = j.value("meta_batch_size", c.meta_batch_size);
  c.steps = j.value("steps", c.steps);
  if (j.contains("sched")) j.at("sched").get_to(c.sched);
  if (j.contains("scheme")) j.at("scheme").get_to(c.scheme);
  if (j.contains("strategy")) c.strategy = strategy_from(j.at("strategy").get<std::string>());
  c.seed = j.value("seed", c.seed);
  c.d_hidden = j.value("d_hidden", c.d_hidden);
  c.d_embed = j.value("d_embed", c.d_embed);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.weightnet_hidden = j.value("weightnet_hidden", c.weightnet_hidden);
  c.standardize_loss_input = j.value("standardize_loss_input", c.standardize_loss_input);
}

// ---------------------------------------------------------------------------
// Parameters / checkpoint
// ---------------------------------------------------------------------------

void to_json(json& j, const WeightNetParams& p) {
  j = json{{"w1", p.w1}, {"b1", p.b1}, {"w2", p.w2}, {"b2", p.b2}};
}

void from_json(const json& j, WeightNetParams& p) {
  j.at("w1").get_to(p.w1);
  j.at("b1").get_to(p.b1);
  j.at("w2").get_to(p.w2);
  p.b2 = j.at("b2").get<double>();
  p.validate();
}

void to_json(json& j, const EncoderParams& p) {
  j = json{{"video_l1", affine_to_json(p.video.l1)},
           {"video_l2", affine_to_json(p.video.l2)},
           {"text_l1", affine_to_json(p.text.l1)},
           {"text_l2", affine_to_json(p.text.l2)},
           {"fusion", affine_to_json(p.fusion)}};
}

void from_json(const json& j, EncoderParams& p) {
  p.video.l1 = affine_from_json(j.at("video_l1"));
  p.video.l2 = affine_from_json(j.at("video_l2"));
  p.text.l1 = affine_from_json(j.at("text_l1"));
  p.text.l2 = affine_from_json(j.at("text_l2"));
  p.fusion = affine_from_json(j.at("fusion"));
  p.validate();
}

void to_json(json& j, const Checkpoint& c) {
  j = json{{"encoder_params", c.encoder},
           {"weightnet_params", c.weightnet},
           {"step", c.step},
           {"config", c.config}};
}

void from_json(const json& j, Checkpoint& c) {
  j.at("encoder_params").get_to(c.encoder);
  j.at("weightnet_params").get_to(c.weightnet);
  c.step = j.at("step").get<std::size_t>();
  j.at("config").get_to(c.config);
}

nlohmann::json trace_to_json(const StepTrace& t) {
  return json{{"step", t.step},
              {"mu", t.mu},
              {"mean_loss", t.mean_loss()},
              {"weights", t.weights},
              {"meta_loss", t.meta_loss},
              {"grad_norm_model", t.grad_norm_model},
              {"grad_norm_weightnet", t.grad_norm_weightnet}};
}

void write_trace_jsonl(const std::filesystem::path& path, const std::vector<StepTrace>& trace) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open trace file for writing: " + path.string());
  for (const StepTrace& t : trace) out << trace_to_json(t).dump() << '\n';
  if (!out.good()) throw std::runtime_error("failed writing trace file: " + path.string());
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

void to_json(json& j, const SyntheticDatasetSpec& s) {
  j = json{{"n_concepts", s.n_concepts},
           {"concept_distribution", s.concept_distribution},
           {"zipf_exponent", s.zipf_exponent},
           {"n_train", s.n_train},
           {"n_meta", s.n_meta},
           {"n_test", s.n_test},
           {"d_latent", s.d_latent},
           {"d_video", s.d_video},
           {"d_text", s.d_text},
           {"misalign_sigma", s.misalign_sigma},
           {"label_fraction", s.label_fraction},
           {"concept_spread", s.concept_spread},
           {"latent_noise", s.latent_noise},
           {"feat_noise", s.feat_noise},
           {"share_projections", s.share_projections},
           {"seed", s.seed}};
}

void from_json(const json& j, SyntheticDatasetSpec& s) {
  s.n_concepts = j.value("n_concepts", s.n_concepts);
  if (j.contains("concept_distribution"))
    j.at("concept_distribution").get_to(s.concept_distribution);
  s.zipf_exponent = j.value("zipf_exponent", s.zipf_exponent);
  s.n_train = j.value("n_train", s.n_train);
  s.n_meta = j.value("n_meta", s.n_meta);
  s.n_test = j.value("n_test", s.n_test);
  s.d_latent = j.value("d_latent", s.d_latent);
  s.d_video = j.value("d_video", s.d_video);
  s.d_text = j.value("d_text", s.d_text);
  s.misalign_sigma = j.value("misalign_sigma", s.misalign_sigma);
  s.label_fraction = j.value("label_fraction", s.label_fraction);
  s.concept_spread = j.value("concept_spread", s.concept_spread);
  s.latent_noise = j.value("latent_noise", s.latent_noise);
  s.feat_noise = j.value("feat_noise", s.feat_noise);
  s.share_projections = j.value("share_projections", s.share_projections);
  s.seed = j.value("seed", s.seed);
}

void to_json(json& j, const Dataset& d) {
  std::vector<std::string> splits;
  splits.reserve(d.split.size());
  for (Split s : d.split) splits.push_back(split_name(s));
  j = json{{"spec", d.spec},
           {"video_feats", d.video_feats},
           {"text_feats", d.text_feats},
           {"labels", d.labels},
           {"concept", d.concept_id},
           {"split", splits}};
}

void from_json(const json& j, Dataset& d) {
  j.at("spec").get_to(d.spec);
  j.at("video_feats").get_to(d.video_feats);
  j.at("text_feats").get_to(d.text_feats);
  j.at("labels").get_to(d.labels);
  j.at("concept").get_to(d.concept_id);
  std::vector<std::string> splits;
  j.at("split").get_to(splits);
  d.split.clear();
  d.split.reserve(splits.size());
  for (const std::string& s : splits) d.split.push_back(split_from(s));
  d.validate();
}

// ---------------------------------------------------------------------------
// Keyframes / captions
// ---------------------------------------------------------------------------

void to_json(json& j, const FrameFeatures& f) {
  std::vector<std::vector<double>> rows(f.frames.rows);
  for (std::size_t r = 0; r < f.frames.rows; ++r) {
    auto row = f.frames.row(r);
    rows[r].assign(row.begin(), row.end());
  }
  j = json{{"video_id", f.video_id}, {"frames", rows}};
}

void from_json(const json& j, FrameFeatures& f) {
  f.video_id = j.at("video_id").get<std::string>();
  const auto rows = j.at("frames").get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw std::invalid_argument("FrameFeatures: empty frame list");
  const std::size_t cols = rows.front().size();
  f.frames = Matrix(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols)
      throw std::invalid_argument("FrameFeatures: ragged frame row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) f.frames.at(r, c) = rows[r][c];
  }
  f.validate();
}

void to_json(json& j, const CaptionRequest& r) {
  j = json{{"video_id", r.video_id},
           {"grid", json{{"w", r.layout.w}, {"h", r.layout.h}}},
           {"frame_refs", r.frame_refs},
           {"prompt", r.prompt}};
}

void from_json(const json& j, CaptionRequest& r) {
  r.video_id = j.at("video_id").get<std::string>();
  r.layout.w = j.at("grid").at("w").get<std::size_t>();
  r.layout.h = j.at("grid").at("h").get<std::size_t>();
  j.at("frame_refs").get_to(r.frame_refs);
  r.layout.order = r.frame_refs;
  r.prompt = j.at("prompt").get<std::string>();
  r.validate();
}

void to_json(json& j, const SelectionRecord& r) {
  j = json{{"video_id", r.video_id},
           {"density", r.selection.density},
           {"distance_index", r.selection.distance_index},
           {"score", r.selection.score},
           {"selected", r.selection.selected},
           {"grid", json{{"w", r.layout.w}, {"h", r.layout.h}, {"order", r.layout.order}}}};
}

void from_json(const json& j, SelectionRecord& r) {
  r.video_id = j.at("video_id").get<std::string>();
  j.at("density").get_to(r.selection.density);
  j.at("distance_index").get_to(r.selection.distance_index);
  j.at("score").get_to(r.selection.score);
  j.at("selected").get_to(r.selection.selected);
  r.layout.w = j.at("grid").at("w").get<std::size_t>();
  r.layout.h = j.at("grid").at("h").get<std::size_t>();
  j.at("grid").at("order").get_to(r.layout.order);
  r.layout.validate();
}

void to_json(json& j, const AugmentedPair& p) {
  j = json{{"video_id", p.video_id}, {"text", p.text}, {"selected_frames", p.selected_frames}};
}

void from_json(const json& j, AugmentedPair& p) {
  p.video_id = j.at("video_id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  j.at("selected_frames").get_to(p.selected_frames);
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

void to_json(json& j, const MetricsReport& r) {
  json per;
  for (const auto& [c, m] : r.per_concept) {
    per[std::to_string(c)] = json{{"count", m.count},
                                  {"r1_v2t", m.r1_v2t()},
                                  {"r1_t2v", m.r1_t2v()},
                                  {"accuracy", m.acc()},
                                  {"hits_r1_v2t", m.hits_r1_v2t},
                                  {"hits_r1_t2v", m.hits_r1_t2v},
                                  {"hits_accuracy", m.hits_accuracy}};
  }
  j = json{{"variant", r.variant},
           {"recall",
            json{{"v2t", json{{"1", r.v2t.r1}, {"5", r.v2t.r5}, {"10", r.v2t.r10}}},
                 {"t2v", json{{"1", r.t2v.r1}, {"5", r.t2v.r5}, {"10", r.t2v.r10}}}}},
           {"accuracy", r.accuracy},
           {"per_concept", per}};
}

void from_json(const json& j, MetricsReport& r) {
  r.variant = j.at("variant").get<std::string>();
  const json& rec = j.at("recall");
  r.v2t = {rec.at("v2t").at("1").get<double>(), rec.at("v2t").at("5").get<double>(),
           rec.at("v2t").at("10").get<double>()};
  r.t2v = {rec.at("t2v").at("1").get<double>(), rec.at("t2v").at("5").get<double>(),
           rec.at("t2v").at("10").get<double>()};
  r.accuracy = j.at("accuracy").get<double>();
  r.per_concept.clear();
  for (const auto& [key, val] : j.at("per_concept").items()) {
    ConceptMetrics m;
    m.count = val.at("count").get<std::size_t>();
    m.hits_r1_v2t = val.at("hits_r1_v2t").get<std::size_t>();
    m.hits_r1_t2v = val.at("hits_r1_t2v").get<std::size_t>();
    m.hits_accuracy = val.at("hits_accuracy").get<std::size_t>();
    r.per_concept[std::stoi(key)] = m;
  }
}

void to_json(json& j, const Variant& v) {
  j = json{{"name", v.name}};
  if (v.sched) j["sched"] = *v.sched;
  if (v.scheme) j["scheme"] = *v.scheme;
  if (v.strategy) j["strategy"] = strategy_name(*v.strategy);
  if (v.seed) j["seed"] = *v.seed;
}

void from_json(const json& j, Variant& v) {
  v.name = j.at("name").get<std::string>();
  if (j.contains("sched")) v.sched = j.at("sched").get<MarginSchedule>();
  if (j.contains("fixed_margin")) v.sched = fixed_margin_schedule(j.at("fixed_margin").get<double>());
  if (j.contains("scheme")) v.scheme = j.at("scheme").get<WeightingScheme>();
  if (j.contains("strategy")) v.strategy = strategy_from(j.at("strategy").get<std::string>());
  if (j.contains("seed")) v.seed = j.at("seed").get<std::uint64_t>();
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path.string());
  json j;
  in >> j;
  return j;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open file for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out.good()) throw std::runtime_error("failed writing file: " + path.string());
}

}  // namespace vlrep
