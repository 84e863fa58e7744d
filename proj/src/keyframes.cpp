#include "vlrep/keyframes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vlrep {

namespace {

double dist2(const Matrix& m, std::size_t a, std::size_t b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < m.cols; ++c) {
    const double diff = m.at(a, c) - m.at(b, c);
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

void FrameFeatures::validate() const {
  if (frames.rows == 0) throw std::invalid_argument("FrameFeatures: need at least one frame");
  if (!frames.all_finite()) throw std::invalid_argument("FrameFeatures: non-finite feature");
}

void GridLayout::validate() const {
  if (w == 0 || h == 0 || w * h != order.size())
    throw std::invalid_argument("GridLayout: W*H = " + std::to_string(w * h) +
                                " does not match " + std::to_string(order.size()) + " frames");
}

void CaptionRequest::validate() const {
  if (video_id.empty()) throw std::invalid_argument("CaptionRequest: empty video_id");
  layout.validate();
  if (prompt != kCaptionPrompt)
    throw std::invalid_argument("CaptionRequest: prompt differs from the canonical string");
  if (frame_refs != layout.order)
    throw std::invalid_argument("CaptionRequest: frame_refs must follow the layout order");
}

std::vector<double> local_density(const FrameFeatures& frames, std::size_t k) {
  frames.validate();
  const std::size_t n = frames.size();
  if (k < 1 || k > n - 1)
    throw std::invalid_argument("local_density: K = " + std::to_string(k) +
                                " out of range [1, " + std::to_string(n - 1) + "]");
  std::vector<double> d(n);
  std::vector<std::pair<double, std::size_t>> neigh;
  neigh.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    neigh.clear();
    for (std::size_t l = 0; l < n; ++l)
      if (l != j) neigh.emplace_back(dist2(frames.frames, l, j), l);
    std::sort(neigh.begin(), neigh.end());
    double acc = 0.0;
    for (std::size_t r = 0; r < k; ++r) acc += neigh[r].first;
    d[j] = std::exp(-acc / static_cast<double>(k));
  }
  return d;
}

std::vector<double> distance_index(const FrameFeatures& frames,
                                   const std::vector<double>& density, GammaForm form) {
  frames.validate();
  const std::size_t n = frames.size();
  if (density.size() != n)
    throw std::invalid_argument("distance_index: density length mismatch");
  std::vector<double> gamma(n);
  for (std::size_t j = 0; j < n; ++j) {
    bool found = false;
    double best = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (!(density[l] > density[j])) continue;
      const double d2 = dist2(frames.frames, l, j);
      if (!found || d2 < best) {
        best = d2;
        found = true;
      }
    }
    if (!found) {
      for (std::size_t l = 0; l < n; ++l) best = std::max(best, dist2(frames.frames, l, j));
      if (form == GammaForm::literal_mixed) best = std::sqrt(best);
    }
    gamma[j] = best;
  }
  return gamma;
}

KeyframeSelection select_keyframes(const FrameFeatures& frames, std::size_t k,
                                   std::size_t q, GammaForm form) {
  frames.validate();
  const std::size_t n = frames.size();
  if (q < 1 || q > n)
    throw std::invalid_argument("select_keyframes: Q = " + std::to_string(q) +
                                " out of range [1, " + std::to_string(n) + "]");
  KeyframeSelection sel;
  sel.density = local_density(frames, k);
  sel.distance_index = distance_index(frames, sel.density, form);
  sel.score.resize(n);
  for (std::size_t j = 0; j < n; ++j) sel.score[j] = sel.density[j] * sel.distance_index[j];

  std::vector<std::size_t> idx(n);
  for (std::size_t j = 0; j < n; ++j) idx[j] = j;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (sel.score[a] != sel.score[b]) return sel.score[a] > sel.score[b];
    return a < b;
  });
  sel.selected.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(q));
  return sel;
}

GridLayout plan_grid(const KeyframeSelection& selection, std::size_t w, std::size_t h,
                     const std::vector<double>* timestamps) {
  if (w == 0 || h == 0 || w * h != selection.selected.size())
    throw std::invalid_argument("plan_grid: W*H = " + std::to_string(w * h) +
                                " does not match Q = " + std::to_string(selection.selected.size()));
  GridLayout layout;
  layout.w = w;
  layout.h = h;
  layout.order = selection.selected;
  std::sort(layout.order.begin(), layout.order.end(), [&](std::size_t a, std::size_t b) {
    if (timestamps != nullptr) {
      const double ta = timestamps->at(a), tb = timestamps->at(b);
      if (ta != tb) return ta < tb;
    }
    return a < b;
  });
  return layout;
}

CaptionRequest build_caption_request(const std::string& video_id, const GridLayout& layout) {
  if (video_id.empty())
    throw std::invalid_argument("build_caption_request: empty video_id");
  layout.validate();
  CaptionRequest req;
  req.video_id = video_id;
  req.layout = layout;
  req.prompt = std::string(kCaptionPrompt);
  req.frame_refs = layout.order;
  return req;
}

}  // namespace vlrep
