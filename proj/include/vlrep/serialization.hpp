#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlrep/encoders.hpp"
#include "vlrep/harness.hpp"
#include "vlrep/keyframes.hpp"
#include "vlrep/metaopt.hpp"
#include "vlrep/numerics.hpp"
#include "vlrep/weighting.hpp"

namespace vlrep {

// Trained state with enough context to resume or evaluate.
struct Checkpoint {
  EncoderParams encoder;
  WeightNetParams weightnet;
  std::size_t step = 0;
  TrainConfig config;
};

// keyframes CLI output: selection plus the planned grid.
struct SelectionRecord {
  std::string video_id;
  KeyframeSelection selection;
  GridLayout layout;
};

// caption CLI output, appendable to the synthetic dataset as an augmented
// text pair.
struct AugmentedPair {
  std::string video_id;
  std::string text;
  std::vector<std::size_t> selected_frames;
};

void to_json(nlohmann::json& j, const Matrix& m);
void from_json(const nlohmann::json& j, Matrix& m);

void to_json(nlohmann::json& j, const MarginSchedule& s);
void from_json(const nlohmann::json& j, MarginSchedule& s);
void to_json(nlohmann::json& j, const WeightingScheme& s);
void from_json(const nlohmann::json& j, WeightingScheme& s);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const WeightNetParams& p);
void from_json(const nlohmann::json& j, WeightNetParams& p);
void to_json(nlohmann::json& j, const EncoderParams& p);
void from_json(const nlohmann::json& j, EncoderParams& p);
void to_json(nlohmann::json& j, const Checkpoint& c);
void from_json(const nlohmann::json& j, Checkpoint& c);

nlohmann::json trace_to_json(const StepTrace& t);
void write_trace_jsonl(const std::filesystem::path& path, const std::vector<StepTrace>& trace);

void to_json(nlohmann::json& j, const SyntheticDatasetSpec& s);
void from_json(const nlohmann::json& j, SyntheticDatasetSpec& s);
void to_json(nlohmann::json& j, const Dataset& d);
void from_json(const nlohmann::json& j, Dataset& d);

void to_json(nlohmann::json& j, const FrameFeatures& f);
void from_json(const nlohmann::json& j, FrameFeatures& f);
void to_json(nlohmann::json& j, const CaptionRequest& r);
void from_json(const nlohmann::json& j, CaptionRequest& r);
void to_json(nlohmann::json& j, const SelectionRecord& r);
void from_json(const nlohmann::json& j, SelectionRecord& r);
void to_json(nlohmann::json& j, const AugmentedPair& p);
void from_json(const nlohmann::json& j, AugmentedPair& p);

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

void to_json(nlohmann::json& j, const Variant& v);
void from_json(const nlohmann::json& j, Variant& v);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace vlrep
