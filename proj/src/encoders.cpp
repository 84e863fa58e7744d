#include "vlrep/encoders.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vlrep {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kMinPreNorm = 1e-12;

void check_finite(const Matrix& m, const std::string& layer) {
  if (!m.all_finite())
    throw std::runtime_error("forward pass: non-finite value in layer " + layer);
}

void check_affine(const AffineParams& p, const char* name) {
  if (p.w.rows == 0 || p.w.cols == 0 || p.b.size() != p.w.rows)
    throw std::invalid_argument(std::string("EncoderParams: bad shape in ") + name);
  if (!p.w.all_finite())
    throw std::invalid_argument(std::string("EncoderParams: non-finite weight in ") + name);
  for (double v : p.b)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string("EncoderParams: non-finite bias in ") + name);
}

// y = x . w^T + b, one output row per input row.
Matrix affine_forward(const AffineParams& p, const Matrix& x) {
  Matrix y = matmul_nt(x, p.w);
  for (std::size_t r = 0; r < y.rows; ++r)
    for (std::size_t c = 0; c < y.cols; ++c) y.at(r, c) += p.b[c];
  return y;
}

struct EncoderForward {
  Matrix pre1;               // B x H, before relu
  Matrix hid;                // B x H
  Matrix pre2;               // B x D_e, before normalization
  std::vector<double> norms; // row norms of pre2
  Matrix emb;                // B x D_e, unit rows
};

EncoderForward run_encoder(const MlpParams& p, const Matrix& x, const char* name) {
  if (x.cols != p.l1.in_dim())
    throw std::invalid_argument(std::string(name) + ": input width " + std::to_string(x.cols) +
                                " does not match layer width " + std::to_string(p.l1.in_dim()));
  EncoderForward f;
  f.pre1 = affine_forward(p.l1, x);
  check_finite(f.pre1, std::string(name) + ".l1");
  f.hid = f.pre1;
  for (double& v : f.hid.data) v = std::max(v, 0.0);
  f.pre2 = affine_forward(p.l2, f.hid);
  check_finite(f.pre2, std::string(name) + ".l2");
  f.norms.resize(f.pre2.rows);
  f.emb = Matrix(f.pre2.rows, f.pre2.cols);
  for (std::size_t r = 0; r < f.pre2.rows; ++r) {
    const double n = l2_norm(f.pre2.row(r));
    if (!(n >= kMinPreNorm))
      throw std::runtime_error(std::string("encode: degenerate pre-normalization ") + name +
                               " embedding at row " + std::to_string(r) +
                               " (norm " + std::to_string(n) + ")");
    f.norms[r] = n;
    for (std::size_t c = 0; c < f.pre2.cols; ++c) f.emb.at(r, c) = f.pre2.at(r, c) / n;
  }
  return f;
}

void check_unit_rows(const Matrix& m, const char* what) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double n = l2_norm(m.row(r));
    if (std::abs(n - 1.0) > 1e-9)
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(r) +
                                  " is not unit norm (" + std::to_string(n) + ")");
  }
}

// d(row/|row|) backward: dPre_r = (dEmb_r - (dEmb_r . emb_r) emb_r) / norm_r.
void normalization_backward(const Matrix& emb, const std::vector<double>& norms,
                            const Matrix& d_emb, Matrix& d_pre) {
  d_pre = Matrix(d_emb.rows, d_emb.cols);
  for (std::size_t r = 0; r < d_emb.rows; ++r) {
    const double proj = dot(d_emb.row(r), emb.row(r));
    for (std::size_t c = 0; c < d_emb.cols; ++c)
      d_pre.at(r, c) = (d_emb.at(r, c) - proj * emb.at(r, c)) / norms[r];
  }
}

struct EncoderGrad {
  Matrix w1, w2;
  std::vector<double> b1, b2;
};

EncoderGrad encoder_backward(const MlpParams& p, const EncoderForward& f,
                             const Matrix& x, const Matrix& d_emb) {
  Matrix d_pre2;
  normalization_backward(f.emb, f.norms, d_emb, d_pre2);
  EncoderGrad g;
  g.w2 = matmul(transpose(d_pre2), f.hid);
  g.b2.assign(d_pre2.cols, 0.0);
  for (std::size_t r = 0; r < d_pre2.rows; ++r)
    for (std::size_t c = 0; c < d_pre2.cols; ++c) g.b2[c] += d_pre2.at(r, c);
  Matrix d_hid = matmul(d_pre2, p.l2.w);
  for (std::size_t k = 0; k < d_hid.data.size(); ++k)
    if (!(f.pre1.data[k] > 0.0)) d_hid.data[k] = 0.0;
  g.w1 = matmul(transpose(d_hid), x);
  g.b1.assign(d_hid.cols, 0.0);
  for (std::size_t r = 0; r < d_hid.rows; ++r)
    for (std::size_t c = 0; c < d_hid.cols; ++c) g.b1[c] += d_hid.at(r, c);
  return g;
}

void append(std::vector<double>& flat, const Matrix& m) {
  flat.insert(flat.end(), m.data.begin(), m.data.end());
}
void append(std::vector<double>& flat, const std::vector<double>& v) {
  flat.insert(flat.end(), v.begin(), v.end());
}

AffineParams take_affine(std::span<const double>& rest, std::size_t out, std::size_t in) {
  AffineParams p;
  p.w = Matrix(out, in);
  std::copy_n(rest.begin(), out * in, p.w.data.begin());
  rest = rest.subspan(out * in);
  p.b.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(out));
  rest = rest.subspan(out);
  return p;
}

AffineParams init_affine(std::size_t out, std::size_t in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  AffineParams p;
  p.w = rng.matrix_uniform(out, in, -bound, bound);
  p.b.resize(out);
  for (double& v : p.b) v = rng.uniform(-bound, bound);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

void EncoderShapes::validate() const {
  if (d_video == 0 || d_text == 0 || d_hidden == 0 || d_embed == 0 || n_classes == 0)
    throw std::invalid_argument("EncoderShapes: all dimensions must be >= 1");
}

EncoderShapes EncoderParams::shapes() const {
  validate();
  return EncoderShapes{video.l1.in_dim(), text.l1.in_dim(), video.l1.out_dim(),
                       video.l2.out_dim(), fusion.out_dim()};
}

std::size_t EncoderParams::param_count() const {
  return video.param_count() + text.param_count() + fusion.param_count();
}

void EncoderParams::validate() const {
  check_affine(video.l1, "video.l1");
  check_affine(video.l2, "video.l2");
  check_affine(text.l1, "text.l1");
  check_affine(text.l2, "text.l2");
  check_affine(fusion, "fusion");
  if (video.l2.in_dim() != video.l1.out_dim() || text.l2.in_dim() != text.l1.out_dim())
    throw std::invalid_argument("EncoderParams: hidden widths do not chain");
  if (video.l1.out_dim() != text.l1.out_dim())
    throw std::invalid_argument("EncoderParams: encoders must share the hidden width");
  if (video.l2.out_dim() != text.l2.out_dim())
    throw std::invalid_argument("EncoderParams: encoders must share the embedding width");
  if (fusion.in_dim() != 2 * video.l2.out_dim())
    throw std::invalid_argument("EncoderParams: fusion head must consume 2*D_e inputs");
}

std::vector<double> EncoderParams::flatten() const {
  validate();
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const MlpParams* enc : {&video, &text}) {
    append(flat, enc->l1.w);
    append(flat, enc->l1.b);
    append(flat, enc->l2.w);
    append(flat, enc->l2.b);
  }
  append(flat, fusion.w);
  append(flat, fusion.b);
  return flat;
}

EncoderParams EncoderParams::from_flat(std::span<const double> flat,
                                       const EncoderShapes& s) {
  s.validate();
  std::span<const double> rest = flat;
  EncoderParams p;
  const std::size_t need = s.d_hidden * s.d_video + s.d_hidden + s.d_embed * s.d_hidden +
                           s.d_embed + s.d_hidden * s.d_text + s.d_hidden +
                           s.d_embed * s.d_hidden + s.d_embed +
                           s.n_classes * 2 * s.d_embed + s.n_classes;
  if (flat.size() != need)
    throw std::invalid_argument("EncoderParams::from_flat: expected " + std::to_string(need) +
                                " values, got " + std::to_string(flat.size()));
  p.video.l1 = take_affine(rest, s.d_hidden, s.d_video);
  p.video.l2 = take_affine(rest, s.d_embed, s.d_hidden);
  p.text.l1 = take_affine(rest, s.d_hidden, s.d_text);
  p.text.l2 = take_affine(rest, s.d_embed, s.d_hidden);
  p.fusion = take_affine(rest, s.n_classes, 2 * s.d_embed);
  p.validate();
  return p;
}

EncoderParams EncoderParams::init(const EncoderShapes& s, Rng& rng) {
  s.validate();
  EncoderParams p;
  p.video.l1 = init_affine(s.d_hidden, s.d_video, rng);
  p.video.l2 = init_affine(s.d_embed, s.d_hidden, rng);
  p.text.l1 = init_affine(s.d_hidden, s.d_text, rng);
  p.text.l2 = init_affine(s.d_embed, s.d_hidden, rng);
  p.fusion = init_affine(s.n_classes, 2 * s.d_embed, rng);
  return p;
}

bool Batch::any_label() const {
  for (int y : labels)
    if (y >= 0) return true;
  return false;
}

void Batch::validate() const {
  if (video.rows == 0 || video.rows != text.rows)
    throw std::invalid_argument("Batch: video/text row counts must match and be >= 1");
  if (!labels.empty() && labels.size() != video.rows)
    throw std::invalid_argument("Batch: labels length must match batch size");
  if (!video.all_finite() || !text.all_finite())
    throw std::invalid_argument("Batch: non-finite feature");
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

EmbeddingBatch encode(const EncoderParams& params, const Matrix& raw_video,
                      const Matrix& raw_text) {
  params.validate();
  if (raw_video.rows != raw_text.rows)
    throw std::invalid_argument("encode: video/text batch sizes differ");
  EmbeddingBatch out;
  out.video = run_encoder(params.video, raw_video, "video").emb;
  out.text = run_encoder(params.text, raw_text, "text").emb;
  return out;
}

SimilarityMatrix similarity(const EmbeddingBatch& emb) {
  if (emb.video.rows != emb.text.rows || emb.video.cols != emb.text.cols)
    throw std::invalid_argument("similarity: embedding shapes differ");
  check_unit_rows(emb.video, "similarity: video");
  check_unit_rows(emb.text, "similarity: text");
  Matrix s = matmul_nt(emb.video, emb.text);
  for (double& v : s.data) v = std::clamp(v, -1.0, 1.0);
  return SimilarityMatrix(std::move(s));
}

Matrix fusion_log_likelihood_matrix(const EncoderParams& params,
                                    const EmbeddingBatch& emb) {
  params.validate();
  const std::size_t b = emb.video.rows;
  const std::size_t de = emb.video.cols;
  const std::size_t c = params.fusion.out_dim();
  Matrix llh(b, c);
  std::vector<double> cat(2 * de);
  std::vector<double> u(c);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < de; ++k) {
      cat[k] = emb.video.at(i, k);
      cat[de + k] = emb.text.at(i, k);
    }
    for (std::size_t j = 0; j < c; ++j) {
      double acc = params.fusion.b[j];
      for (std::size_t k = 0; k < 2 * de; ++k) acc += params.fusion.w.at(j, k) * cat[k];
      u[j] = acc;
    }
    const double lse = log_sum_exp(u);
    for (std::size_t j = 0; j < c; ++j) llh.at(i, j) = u[j] - lse;
  }
  check_finite(llh, "fusion");
  return llh;
}

std::vector<double> fusion_log_likelihoods(const EncoderParams& params,
                                           const EmbeddingBatch& emb, std::size_t i) {
  if (i >= emb.video.rows)
    throw std::invalid_argument("fusion_log_likelihoods: row index out of range");
  const Matrix llh = fusion_log_likelihood_matrix(params, emb);
  auto row = llh.row(i);
  return std::vector<double>(row.begin(), row.end());
}

// ---------------------------------------------------------------------------
// Per-sample backward
// ---------------------------------------------------------------------------

PerSampleGrads per_sample_loss_and_grads(const EncoderParams& params,
                                         const Batch& batch, double mu,
                                         double tau, double eta) {
  params.validate();
  batch.validate();

  const EncoderForward vf = run_encoder(params.video, batch.video, "video");
  const EncoderForward tf = run_encoder(params.text, batch.text, "text");
  const EmbeddingBatch emb{vf.emb, tf.emb};
  const SimilarityMatrix sim = similarity(emb);
  const AngleMatrix angles = AngleMatrix::from_similarity(sim);

  const std::size_t b = batch.size();
  const std::vector<int>* labels = batch.labels.empty() ? nullptr : &batch.labels;
  Matrix llh;
  const bool labeled = batch.any_label();
  if (labeled) llh = fusion_log_likelihood_matrix(params, emb);

  PerSampleGrads out;
  out.losses = combined_loss_at_margin(sim, labels, labeled ? &llh : nullptr, mu, tau, eta);
  out.grads.reserve(b);

  const std::size_t de = emb.video.cols;
  const std::size_t nc = params.fusion.out_dim();

  for (std::size_t i = 0; i < b; ++i) {
    // d loss_i / d S, nonzero only on row i (v2t) and column i (t2v).
    Matrix d_s(b, b);
    for (Direction dir : {Direction::v2t, Direction::t2v}) {
      const std::vector<double> z = angular_logits(angles, mu, tau, i, dir);
      const double lse = log_sum_exp(z);
      const double lam_ii = angles.lambda.at(i, i);
      for (std::size_t j = 0; j < b; ++j) {
        const double p = std::exp(z[j] - lse);
        const double dz = p - (j == i ? 1.0 : 0.0);
        double angle_deriv;  // d z_j / d lambda at the entry feeding z_j
        if (j == i) {
          const double m_eff = lam_ii <= kHalfPi ? std::max(lam_ii - mu, 0.0) : lam_ii;
          angle_deriv = -std::sin(m_eff) / tau;
        } else {
          const double lam = dir == Direction::v2t ? angles.lambda.at(i, j)
                                                   : angles.lambda.at(j, i);
          angle_deriv = -std::sin(lam) / tau;
        }
        const double s_entry = dir == Direction::v2t ? sim.s.at(i, j) : sim.s.at(j, i);
        const double contrib = dz * angle_deriv * safe_arccos_deriv(s_entry);
        if (dir == Direction::v2t)
          d_s.at(i, j) += contrib;
        else
          d_s.at(j, i) += contrib;
      }
    }

    Matrix d_emb_v = matmul(d_s, emb.text);
    Matrix d_emb_t = matmul(transpose(d_s), emb.video);

    // Cross-entropy path for labeled sample i: logits over classes from the
    // concatenated pair embedding.
    Matrix d_fusion_w(params.fusion.w.rows, params.fusion.w.cols);
    std::vector<double> d_fusion_b(nc, 0.0);
    if (labels != nullptr && (*labels)[i] >= 0) {
      const auto y = static_cast<std::size_t>((*labels)[i]);
      for (std::size_t c = 0; c < nc; ++c) {
        const double du = eta * (std::exp(llh.at(i, c)) - (c == y ? 1.0 : 0.0));
        d_fusion_b[c] = du;
        for (std::size_t k = 0; k < de; ++k) {
          d_fusion_w.at(c, k) = du * emb.video.at(i, k);
          d_fusion_w.at(c, de + k) = du * emb.text.at(i, k);
          d_emb_v.at(i, k) += du * params.fusion.w.at(c, k);
          d_emb_t.at(i, k) += du * params.fusion.w.at(c, de + k);
        }
      }
    }

    const EncoderGrad gv = encoder_backward(params.video, vf, batch.video, d_emb_v);
    const EncoderGrad gt = encoder_backward(params.text, tf, batch.text, d_emb_t);

    std::vector<double> flat;
    flat.reserve(params.param_count());
    append(flat, gv.w1);
    append(flat, gv.b1);
    append(flat, gv.w2);
    append(flat, gv.b2);
    append(flat, gt.w1);
    append(flat, gt.b1);
    append(flat, gt.w2);
    append(flat, gt.b2);
    append(flat, d_fusion_w);
    append(flat, d_fusion_b);
    for (double v : flat)
      if (!std::isfinite(v))
        throw std::runtime_error("per_sample_loss_and_grads: non-finite gradient for sample " +
                                 std::to_string(i));
    out.grads.push_back(std::move(flat));
  }
  return out;
}

}  // namespace vlrep
