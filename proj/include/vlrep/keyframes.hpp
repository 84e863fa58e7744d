#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "vlrep/numerics.hpp"

namespace vlrep {

// One row per frame feature vector, in temporal order.
struct FrameFeatures {
  Matrix frames;
  std::string video_id;

  std::size_t size() const { return frames.rows; }
  void validate() const;
};

// Distance-index form. `squared` uses squared Euclidean distance in both
// branches; `literal_mixed` keeps the unsquared distance in the
// no-denser-point branch for comparison.
enum class GammaForm { squared, literal_mixed };

struct KeyframeSelection {
  std::vector<double> density;         // d
  std::vector<double> distance_index;  // gamma
  std::vector<double> score;           // d * gamma
  std::vector<std::size_t> selected;   // Q indices, score descending
};

struct GridLayout {
  std::size_t w = 0;
  std::size_t h = 0;
  std::vector<std::size_t> order;  // frame indices in row-major reading order

  void validate() const;
};

inline constexpr std::string_view kCaptionPrompt =
    "Write a short caption sentence for the video in order from left to right, top to bottom";

struct CaptionRequest {
  std::string video_id;
  GridLayout layout;
  std::string prompt;
  std::vector<std::size_t> frame_refs;

  void validate() const;
};

// d_j = exp(-(1/K) sum over the K nearest other frames of squared distance).
// Neighbor ties break toward the lower frame index; the sum runs in
// ascending (distance, index) order.
std::vector<double> local_density(const FrameFeatures& frames, std::size_t k);

// gamma_j = min squared distance to any strictly denser frame, or the max
// distance to any frame when none is denser (squared under GammaForm::squared).
std::vector<double> distance_index(const FrameFeatures& frames,
                                   const std::vector<double>& density,
                                   GammaForm form = GammaForm::squared);

// Top-Q frames by d*gamma, ties broken by lower frame index.
KeyframeSelection select_keyframes(const FrameFeatures& frames, std::size_t k,
                                   std::size_t q, GammaForm form = GammaForm::squared);

// Row-major layout of the selected frames in ascending temporal order.
// `timestamps`, when given, overrides the frame index as the temporal key.
GridLayout plan_grid(const KeyframeSelection& selection, std::size_t w, std::size_t h,
                     const std::vector<double>* timestamps = nullptr);

CaptionRequest build_caption_request(const std::string& video_id, const GridLayout& layout);

}  // namespace vlrep
