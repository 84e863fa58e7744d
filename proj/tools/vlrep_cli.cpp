// Command-line frontend: data generation, training, evaluation, key-frame
// selection, caption-request assembly, property verification and ablations.
// Exit codes: 0 success, 1 verification/operation failure, 2 bad input.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>

#include "vlrep/caption.hpp"
#include "vlrep/harness.hpp"
#include "vlrep/keyframes.hpp"
#include "vlrep/metaopt.hpp"
#include "vlrep/serialization.hpp"
#include "vlrep/verify.hpp"

namespace {

using nlohmann::json;

// "3x4" -> (3, 4)
void parse_grid(const std::string& text, std::size_t& w, std::size_t& h) {
  unsigned long pw = 0, ph = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lux%lu%c", &pw, &ph, &extra) != 2 || pw == 0 || ph == 0)
    throw std::invalid_argument("bad --grid value '" + text + "', expected WxH like 3x4");
  w = pw;
  h = ph;
}

// "host:port/path" or "http://host:port/path" -> backend.
std::unique_ptr<vlrep::CaptionBackend> make_http_backend(std::string endpoint) {
  constexpr std::string_view kScheme = "http://";
  if (endpoint.starts_with(kScheme)) endpoint.erase(0, kScheme.size());
  const std::size_t slash = endpoint.find('/');
  const std::string hostport = endpoint.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : endpoint.substr(slash);
  const std::size_t colon = hostport.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("endpoint must look like host:port[/path]");
  const std::string host = hostport.substr(0, colon);
  const int port = std::stoi(hostport.substr(colon + 1));
  return std::make_unique<vlrep::HttpCaptionBackend>(host, port, path);
}

int run(int argc, char** argv) {
  CLI::App app{"meta-weighted angular-margin video-text representation toolkit"};
  app.require_subcommand(1);

  // --- gen-data ---
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic paired dataset");
  std::string gen_spec, gen_out;
  gen->add_option("--spec", gen_spec, "dataset spec JSON")->required();
  gen->add_option("--out", gen_out, "output dataset JSON")->required();
  gen->callback([&] {
    vlrep::SyntheticDatasetSpec spec = vlrep::read_json_file(gen_spec);
    const vlrep::Dataset data = vlrep::generate(spec);
    vlrep::write_json_file(gen_out, json(data));
    std::cout << "wrote " << data.size() << " samples to " << gen_out << "\n";
  });

  // --- train ---
  auto* tr = app.add_subcommand("train", "train encoders and weightnet");
  std::string tr_config, tr_data, tr_out, tr_trace;
  tr->add_option("--config", tr_config, "train config JSON")->required();
  tr->add_option("--data", tr_data, "dataset JSON")->required();
  tr->add_option("--out", tr_out, "output checkpoint JSON")->required();
  tr->add_option("--trace", tr_trace, "output per-step trace JSONL");
  tr->callback([&] {
    vlrep::TrainConfig cfg = vlrep::read_json_file(tr_config);
    vlrep::Dataset data = vlrep::read_json_file(tr_data);
    const vlrep::TrainResult result =
        vlrep::train(cfg, data.batch_for(vlrep::Split::train), data.batch_for(vlrep::Split::meta));
    vlrep::Checkpoint ckpt;
    ckpt.encoder = result.encoder;
    ckpt.weightnet = result.weightnet;
    ckpt.step = cfg.steps;
    ckpt.config = cfg;
    vlrep::write_json_file(tr_out, json(ckpt));
    if (!tr_trace.empty()) vlrep::write_trace_jsonl(tr_trace, result.trace);
    std::cout << "trained " << cfg.steps << " steps, checkpoint at " << tr_out << "\n";
  });

  // --- eval ---
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  std::string ev_ckpt, ev_data, ev_out, ev_name = "eval";
  ev->add_option("--ckpt", ev_ckpt, "checkpoint JSON")->required();
  ev->add_option("--data", ev_data, "dataset JSON")->required();
  ev->add_option("--out", ev_out, "output metrics JSON")->required();
  ev->add_option("--name", ev_name, "variant name recorded in the report");
  ev->callback([&] {
    vlrep::Checkpoint ckpt = vlrep::read_json_file(ev_ckpt);
    vlrep::Dataset data = vlrep::read_json_file(ev_data);
    const vlrep::MetricsReport report = vlrep::evaluate(ckpt.encoder, data, ev_name);
    vlrep::write_json_file(ev_out, json(report));
    std::cout << "R@1 v2t=" << report.v2t.r1 << " t2v=" << report.t2v.r1
              << " accuracy=" << report.accuracy << "\n";
  });

  // --- keyframes ---
  auto* kf = app.add_subcommand("keyframes", "density-peak key-frame selection");
  std::string kf_frames, kf_grid = "3x4", kf_out;
  std::size_t kf_k = 6, kf_q = 12;
  kf->add_option("--frames", kf_frames, "frame features JSON")->required();
  kf->add_option("--k", kf_k, "neighbors for local density");
  kf->add_option("--q", kf_q, "number of frames to select");
  kf->add_option("--grid", kf_grid, "grid layout WxH (W*H must equal Q)");
  kf->add_option("--out", kf_out, "output selection JSON")->required();
  kf->callback([&] {
    vlrep::FrameFeatures frames = vlrep::read_json_file(kf_frames);
    std::size_t w = 0, h = 0;
    parse_grid(kf_grid, w, h);
    vlrep::SelectionRecord record;
    record.video_id = frames.video_id;
    record.selection = vlrep::select_keyframes(frames, kf_k, kf_q);
    record.layout = vlrep::plan_grid(record.selection, w, h);
    vlrep::write_json_file(kf_out, json(record));
    std::cout << "selected " << kf_q << " of " << frames.size() << " frames\n";
  });

  // --- caption-request ---
  auto* cap = app.add_subcommand("caption-request", "assemble and submit a caption request");
  std::string cap_sel, cap_backend = "mock", cap_endpoint, cap_out;
  cap->add_option("--selection", cap_sel, "selection JSON from `keyframes`")->required();
  cap->add_option("--backend", cap_backend, "mock|http")
      ->check(CLI::IsMember({"mock", "http"}));
  cap->add_option("--endpoint", cap_endpoint, "http backend endpoint host:port[/path]");
  cap->add_option("--out", cap_out, "output pair JSON")->required();
  cap->callback([&] {
    vlrep::SelectionRecord record = vlrep::read_json_file(cap_sel);
    std::unique_ptr<vlrep::CaptionBackend> backend;
    if (cap_backend == "mock") {
      backend = std::make_unique<vlrep::MockCaptionBackend>();
    } else {
      if (cap_endpoint.empty())
        throw std::invalid_argument("--backend http requires --endpoint");
      backend = make_http_backend(cap_endpoint);
    }
    const vlrep::CaptionRequest request =
        vlrep::build_caption_request(record.video_id, record.layout);
    vlrep::AugmentedPair pair;
    pair.video_id = record.video_id;
    pair.text = vlrep::submit_caption_request(request, *backend);
    pair.selected_frames = record.layout.order;
    vlrep::write_json_file(cap_out, json(pair));
    std::cout << "caption: " << pair.text << "\n";
  });

  // --- verify ---
  auto* vf = app.add_subcommand("verify", "run the property/oracle suites");
  std::string vf_suite = "all";
  vf->add_option("--suite", vf_suite, "theorem1|metagrad|density|all")
      ->check(CLI::IsMember({"theorem1", "metagrad", "density", "all"}));
  bool verify_ok = true;
  vf->callback([&] {
    if (vf_suite == "theorem1")
      verify_ok = vlrep::verify_theorem1(std::cout);
    else if (vf_suite == "metagrad")
      verify_ok = vlrep::verify_metagrad(std::cout);
    else if (vf_suite == "density")
      verify_ok = vlrep::verify_density(std::cout);
    else
      verify_ok = vlrep::verify_all(std::cout);
  });

  // --- ablate ---
  auto* ab = app.add_subcommand("ablate", "train and evaluate a set of config variants");
  std::string ab_config, ab_spec, ab_variants, ab_out;
  bool ab_serial = false;
  ab->add_option("--config", ab_config, "base train config JSON")->required();
  ab->add_option("--spec", ab_spec, "dataset spec JSON")->required();
  ab->add_option("--variants", ab_variants, "JSON array of variant overrides")->required();
  ab->add_option("--out", ab_out, "output report JSON")->required();
  ab->add_flag("--serial", ab_serial, "run variants one at a time");
  ab->callback([&] {
    vlrep::TrainConfig cfg = vlrep::read_json_file(ab_config);
    vlrep::SyntheticDatasetSpec spec = vlrep::read_json_file(ab_spec);
    const std::vector<vlrep::Variant> variants = vlrep::read_json_file(ab_variants);
    const std::vector<vlrep::MetricsReport> reports =
        vlrep::run_experiment(cfg, spec, variants, !ab_serial);
    vlrep::write_json_file(ab_out, json(reports));
    for (const vlrep::MetricsReport& r : reports)
      std::cout << r.variant << ": R@1 v2t=" << r.v2t.r1 << " t2v=" << r.t2v.r1
                << " accuracy=" << r.accuracy << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return verify_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vlrep::TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "bad input: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bad input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
