#include "mtml/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mtml/kernels.hpp"
#include "mtml/numerics.hpp"

namespace mtml {
namespace {

Matrix he_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix W(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows));
  for (auto& w : W.data) w = rng.uniform(-limit, limit);
  return W;
}

void add_row_bias(Matrix& A, const Matrix& b) {
  const auto& k = kernels::ops();
  for (std::size_t i = 0; i < A.rows; ++i) k.axpy(A.row(i), b.row(0), 1.0, A.cols);
}

Matrix column_sums(const Matrix& A) {
  Matrix s(1, A.cols);
  const auto& k = kernels::ops();
  for (std::size_t i = 0; i < A.rows; ++i) k.axpy(s.row(0), A.row(i), 1.0, A.cols);
  return s;
}

}  // namespace

SlicedModel init_model(const ModelConfig& cfg, Rng& rng) {
  if (cfg.input_dim < 1 || cfg.backbone_widths.empty()) {
    throw std::invalid_argument("init_model: input_dim and backbone widths must be >= 1");
  }
  if (cfg.num_slices < 1 || cfg.slice_dim < 1) {
    throw std::invalid_argument("init_model: need num_slices * slice_dim >= 1");
  }
  if (cfg.num_classes < 2) throw std::invalid_argument("init_model: need at least 2 classes");
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw std::invalid_argument("init_model: dropout_rate must be in [0, 1)");
  }

  SlicedModel m;
  m.input_dim = cfg.input_dim;
  m.slice_dim = cfg.slice_dim;
  m.num_classes = cfg.num_classes;
  m.dropout_rate = cfg.dropout_rate;
  m.per_slice_classifiers = cfg.per_slice_classifiers;

  std::size_t in = cfg.input_dim;
  for (std::size_t width : cfg.backbone_widths) {
    if (width < 1) throw std::invalid_argument("init_model: backbone width must be >= 1");
    m.backbone.push_back({he_uniform(in, width, rng), Matrix(1, width)});
    in = width;
  }
  m.feature_dim = in;

  for (std::size_t i = 0; i < cfg.num_slices; ++i) {
    m.slices.push_back(he_uniform(m.feature_dim, cfg.slice_dim, rng));
  }

  if (cfg.per_slice_classifiers) {
    for (std::size_t i = 0; i < cfg.num_slices; ++i) {
      m.classifiers.push_back({he_uniform(cfg.slice_dim, cfg.num_classes, rng),
                               Matrix(1, cfg.num_classes)});
    }
  } else {
    m.classifiers.push_back({he_uniform(m.embed_dim(), cfg.num_classes, rng),
                             Matrix(1, cfg.num_classes)});
  }
  return m;
}

ForwardTrace forward(const SlicedModel& model, const Matrix& X, RunMode mode, Rng* rng) {
  if (X.cols != model.input_dim) {
    throw std::invalid_argument("forward: input width " + std::to_string(X.cols) +
                                " does not match model input_dim " +
                                std::to_string(model.input_dim));
  }
  const bool use_dropout = mode == RunMode::train && model.dropout_rate > 0.0;
  if (use_dropout && rng == nullptr) {
    throw std::invalid_argument("forward: train mode with dropout needs an rng");
  }

  ForwardTrace trace;
  trace.input = X;
  const auto& k = kernels::ops();

  const Matrix* current = &trace.input;
  for (const auto& layer : model.backbone) {
    Matrix Z = matmul(*current, layer.W);
    add_row_bias(Z, layer.b);
    Matrix A(Z.rows, Z.cols);
    k.relu(Z.data.data(), A.data.data(), Z.size());
    if (use_dropout) {
      Matrix mask(Z.rows, Z.cols);
      const double keep = 1.0 - model.dropout_rate;
      const double inv_keep = 1.0 / keep;
      for (auto& v : mask.data) v = rng->uniform() < keep ? inv_keep : 0.0;
      k.hadamard(A.data.data(), mask.data.data(), A.size());
      trace.dropout_masks.push_back(std::move(mask));
    }
    trace.preacts.push_back(std::move(Z));
    trace.acts.push_back(std::move(A));
    current = &trace.acts.back();
  }

  const Matrix& H = trace.cnn_feature();
  trace.concat_embedding = Matrix(X.rows, model.embed_dim());
  for (std::size_t i = 0; i < model.num_slices(); ++i) {
    Matrix raw = matmul(H, model.slices[i]);
    Matrix normed = l2_normalize_rows(raw);
    for (std::size_t r = 0; r < normed.rows; ++r) {
      std::copy(normed.row(r), normed.row(r) + model.slice_dim,
                trace.concat_embedding.row(r) + i * model.slice_dim);
    }
    trace.slice_raw.push_back(std::move(raw));
    trace.slice_embeddings.push_back(std::move(normed));
  }

  if (model.per_slice_classifiers) {
    for (std::size_t i = 0; i < model.num_slices(); ++i) {
      Matrix logits = matmul(trace.slice_embeddings[i], model.classifiers[i].W);
      add_row_bias(logits, model.classifiers[i].b);
      trace.slice_logits.push_back(std::move(logits));
    }
  } else {
    trace.logits = matmul(trace.concat_embedding, model.classifiers[0].W);
    add_row_bias(trace.logits, model.classifiers[0].b);
  }
  return trace;
}

ModelGrads zero_grads(const SlicedModel& model) {
  ModelGrads g;
  for (const auto& layer : model.backbone) {
    g.backbone.push_back({Matrix(layer.W.rows, layer.W.cols), Matrix(1, layer.b.cols)});
  }
  for (const auto& s : model.slices) g.slices.push_back(Matrix(s.rows, s.cols));
  for (const auto& c : model.classifiers) {
    g.classifiers.push_back({Matrix(c.W.rows, c.W.cols), Matrix(1, c.b.cols)});
  }
  return g;
}

ModelGrads backward(const SlicedModel& model, const ForwardTrace& trace,
                    const std::vector<Matrix>& grad_slices, const Matrix& grad_logits,
                    const std::vector<Matrix>& grad_slice_logits) {
  const std::size_t batch = trace.input.rows;
  const std::size_t N = model.num_slices();
  if (!grad_slices.empty() && grad_slices.size() != N) {
    throw std::invalid_argument("backward: grad_slices must have one entry per slice");
  }
  for (const auto& g : grad_slices) require_shape(g, batch, model.slice_dim, "backward grad_slice");
  if (grad_logits.size() != 0) {
    require_shape(grad_logits, batch, model.num_classes, "backward grad_logits");
  }

  ModelGrads grads = zero_grads(model);
  const auto& k = kernels::ops();
  const Matrix& H = trace.cnn_feature();

  // classifier path
  Matrix grad_concat(batch, model.embed_dim());
  std::vector<Matrix> head_grad_on_slice(N);
  if (model.per_slice_classifiers) {
    if (!grad_slice_logits.empty()) {
      if (grad_slice_logits.size() != N) {
        throw std::invalid_argument("backward: grad_slice_logits must have one entry per slice");
      }
      for (std::size_t i = 0; i < N; ++i) {
        require_shape(grad_slice_logits[i], batch, model.num_classes, "backward grad_slice_logits");
        grads.classifiers[i].W = matmul_transpose_a(trace.slice_embeddings[i],
                                                    grad_slice_logits[i]);
        grads.classifiers[i].b = column_sums(grad_slice_logits[i]);
        head_grad_on_slice[i] = matmul_transpose_b(grad_slice_logits[i], model.classifiers[i].W);
      }
    }
  } else if (grad_logits.size() != 0) {
    grads.classifiers[0].W = matmul_transpose_a(trace.concat_embedding, grad_logits);
    grads.classifiers[0].b = column_sums(grad_logits);
    grad_concat = matmul_transpose_b(grad_logits, model.classifiers[0].W);
  }

  // slice paths; slice j only ever sees grad_slices[j] and its own concat segment
  Matrix grad_h(batch, model.feature_dim);
  for (std::size_t i = 0; i < N; ++i) {
    Matrix up(batch, model.slice_dim);
    for (std::size_t r = 0; r < batch; ++r) {
      std::copy(grad_concat.row(r) + i * model.slice_dim,
                grad_concat.row(r) + (i + 1) * model.slice_dim, up.row(r));
    }
    if (!grad_slices.empty()) {
      k.axpy(up.data.data(), grad_slices[i].data.data(), 1.0, up.size());
    }
    if (head_grad_on_slice[i].size() != 0) {
      k.axpy(up.data.data(), head_grad_on_slice[i].data.data(), 1.0, up.size());
    }
    Matrix grad_raw;
    l2_normalize_rows_backward(trace.slice_raw[i], up, grad_raw);
    grads.slices[i] = matmul_transpose_a(H, grad_raw);
    Matrix gh = matmul_transpose_b(grad_raw, model.slices[i]);
    k.axpy(grad_h.data.data(), gh.data.data(), 1.0, grad_h.size());
  }

  // backbone, last layer first
  Matrix delta = std::move(grad_h);
  for (std::size_t l = model.backbone.size(); l-- > 0;) {
    if (!trace.dropout_masks.empty()) {
      k.hadamard(delta.data.data(), trace.dropout_masks[l].data.data(), delta.size());
    }
    Matrix dpre(delta.rows, delta.cols);
    k.relu_backward(trace.preacts[l].data.data(), delta.data.data(), dpre.data.data(),
                    delta.size());
    const Matrix& below = l == 0 ? trace.input : trace.acts[l - 1];
    grads.backbone[l].W = matmul_transpose_a(below, dpre);
    grads.backbone[l].b = column_sums(dpre);
    if (l > 0) delta = matmul_transpose_b(dpre, model.backbone[l].W);
  }
  return grads;
}

std::vector<Matrix*> parameters(SlicedModel& model) {
  std::vector<Matrix*> out;
  for (auto& layer : model.backbone) {
    out.push_back(&layer.W);
    out.push_back(&layer.b);
  }
  for (auto& s : model.slices) out.push_back(&s);
  for (auto& c : model.classifiers) {
    out.push_back(&c.W);
    out.push_back(&c.b);
  }
  return out;
}

std::vector<Matrix*> parameters(ModelGrads& grads) {
  std::vector<Matrix*> out;
  for (auto& layer : grads.backbone) {
    out.push_back(&layer.W);
    out.push_back(&layer.b);
  }
  for (auto& s : grads.slices) out.push_back(&s);
  for (auto& c : grads.classifiers) {
    out.push_back(&c.W);
    out.push_back(&c.b);
  }
  return out;
}

std::vector<std::string> parameter_names(const SlicedModel& model) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < model.backbone.size(); ++l) {
    out.push_back("backbone" + std::to_string(l) + ".W");
    out.push_back("backbone" + std::to_string(l) + ".b");
  }
  for (std::size_t i = 0; i < model.slices.size(); ++i) {
    out.push_back("slice" + std::to_string(i));
  }
  for (std::size_t c = 0; c < model.classifiers.size(); ++c) {
    out.push_back("classifier" + std::to_string(c) + ".W");
    out.push_back("classifier" + std::to_string(c) + ".b");
  }
  return out;
}

FusedEmbedding fuse_embedding(const SlicedModel& model) {
  FusedEmbedding fused;
  fused.M = Matrix(model.feature_dim, model.embed_dim());
  fused.boundaries.push_back(0);
  for (std::size_t i = 0; i < model.num_slices(); ++i) {
    for (std::size_t r = 0; r < model.feature_dim; ++r) {
      std::copy(model.slices[i].row(r), model.slices[i].row(r) + model.slice_dim,
                fused.M.row(r) + i * model.slice_dim);
    }
    fused.boundaries.push_back((i + 1) * model.slice_dim);
  }
  return fused;
}

FusedForward forward_fused(const SlicedModel& model, const FusedEmbedding& fused,
                           const Matrix& X) {
  ForwardTrace feat = forward(model, X, RunMode::eval);
  FusedForward out;
  Matrix raw = matmul(feat.cnn_feature(), fused.M);
  out.concat_embedding = Matrix(raw.rows, raw.cols);
  const auto& k = kernels::ops();
  for (std::size_t r = 0; r < raw.rows; ++r) {
    for (std::size_t seg = 0; seg + 1 < fused.boundaries.size(); ++seg) {
      const std::size_t lo = fused.boundaries[seg];
      const std::size_t len = fused.boundaries[seg + 1] - lo;
      const double* src = raw.row(r) + lo;
      double* dst = out.concat_embedding.row(r) + lo;
      const double norm = std::sqrt(k.dot(src, src, len));
      const double inv = 1.0 / (norm + kNormEpsilon);
      for (std::size_t j = 0; j < len; ++j) dst[j] = src[j] * inv;
    }
  }
  if (!model.per_slice_classifiers) {
    out.logits = matmul(out.concat_embedding, model.classifiers[0].W);
    add_row_bias(out.logits, model.classifiers[0].b);
  }
  return out;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) {
    throw std::runtime_error("checkpoint: matrix payload does not match its shape");
  }
  return m;
}

}  // namespace

void save_checkpoint(const SlicedModel& model, const std::string& path) {
  nlohmann::json j;
  j["format"] = "mtml-checkpoint-v1";
  j["input_dim"] = model.input_dim;
  j["feature_dim"] = model.feature_dim;
  j["slice_dim"] = model.slice_dim;
  j["num_slices"] = model.num_slices();
  j["num_classes"] = model.num_classes;
  j["dropout_rate"] = model.dropout_rate;
  j["per_slice_classifiers"] = model.per_slice_classifiers;
  std::vector<std::size_t> widths;
  for (const auto& layer : model.backbone) widths.push_back(layer.W.cols);
  j["backbone_widths"] = widths;
  j["backbone"] = nlohmann::json::array();
  for (const auto& layer : model.backbone) {
    j["backbone"].push_back({{"W", matrix_to_json(layer.W)}, {"b", matrix_to_json(layer.b)}});
  }
  j["slices"] = nlohmann::json::array();
  for (const auto& s : model.slices) j["slices"].push_back(matrix_to_json(s));
  j["classifiers"] = nlohmann::json::array();
  for (const auto& c : model.classifiers) {
    j["classifiers"].push_back({{"W", matrix_to_json(c.W)}, {"b", matrix_to_json(c.b)}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

SlicedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "mtml-checkpoint-v1") {
    throw std::runtime_error("checkpoint: '" + path + "' is not a recognized checkpoint");
  }
  SlicedModel m;
  m.input_dim = j.at("input_dim").get<std::size_t>();
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.slice_dim = j.at("slice_dim").get<std::size_t>();
  m.num_classes = j.at("num_classes").get<std::size_t>();
  m.dropout_rate = j.at("dropout_rate").get<double>();
  m.per_slice_classifiers = j.at("per_slice_classifiers").get<bool>();
  for (const auto& layer : j.at("backbone")) {
    m.backbone.push_back({matrix_from_json(layer.at("W")), matrix_from_json(layer.at("b"))});
  }
  for (const auto& s : j.at("slices")) m.slices.push_back(matrix_from_json(s));
  for (const auto& c : j.at("classifiers")) {
    m.classifiers.push_back({matrix_from_json(c.at("W")), matrix_from_json(c.at("b"))});
  }
  return m;
}

}  // namespace mtml
