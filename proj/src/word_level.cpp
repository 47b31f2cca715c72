#include "perturbkit/word_level.hpp"

#include <string>

namespace perturbkit {

namespace {

using Index = Eigen::Index;

void require_kind(const Record& r, Kind kind) {
  if (r.kind != kind)
    throw ValidationError("record " + r.pair_id + " has kind " + std::string(to_string(r.kind)) +
                          ", expected " + std::string(to_string(kind)));
}

Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> row_major(
    std::span<const float> values, Index offset, Index rows, Index cols) {
  return {values.data() + offset, rows, cols};
}

} // namespace

Matrix<double> word_membership(std::span<const int> alignment) {
  int words = 0;
  for (std::size_t p = 0; p < alignment.size(); ++p) {
    const int w = alignment[p];
    if (w == kSpecialToken) continue;
    if (w == words) {
      ++words;
    } else if (w != words - 1 || alignment[p - 1] != w) {
      throw ValidationError("word indices in alignment are not contiguous at position " +
                            std::to_string(p));
    }
  }
  if (words == 0) throw ValidationError("alignment contains no words");
  Matrix<double> g = Matrix<double>::Zero(words, static_cast<Index>(alignment.size()));
  for (std::size_t p = 0; p < alignment.size(); ++p)
    if (alignment[p] != kSpecialToken) g(alignment[p], static_cast<Index>(p)) = 1.0;
  return g;
}

namespace {

Matrix<double> pool_square(const Eigen::Ref<const Matrix<double>>& m, std::span<const int> alignment) {
  if (m.rows() != m.cols() || m.rows() != static_cast<Index>(alignment.size()))
    throw ValidationError("matrix of " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          " does not match alignment of length " + std::to_string(alignment.size()));
  const Matrix<double> g = word_membership(alignment);
  const Vector<double> inv_counts = g.rowwise().sum().cwiseInverse();
  return inv_counts.asDiagonal() * (g * m * g.transpose());
}

} // namespace

Matrix<double> attention_to_words(const Eigen::Ref<const Matrix<double>>& attention,
                                  std::span<const int> alignment) {
  Matrix<double> w = pool_square(attention, alignment);
  for (Index i = 0; i < w.rows(); ++i) {
    double s = w.row(i).sum();
    if (s > 0.0) w.row(i) /= s;
    else w.row(i).setConstant(1.0 / static_cast<double>(w.cols()));
  }
  return w;
}

Matrix<double> impact_to_words(const Eigen::Ref<const Matrix<double>>& impact,
                               std::span<const int> alignment) {
  return pool_square(impact, alignment);
}

Matrix<double> hidden_to_words(const Eigen::Ref<const Matrix<double>>& hidden,
                               std::span<const int> alignment) {
  if (hidden.rows() != static_cast<Index>(alignment.size()))
    throw ValidationError("hidden states have " + std::to_string(hidden.rows()) +
                          " rows, alignment has " + std::to_string(alignment.size()));
  const Matrix<double> g = word_membership(alignment);
  const Vector<double> inv_counts = g.rowwise().sum().cwiseInverse();
  return inv_counts.asDiagonal() * (g * hidden);
}

Vector<double> logprob_to_words(const Eigen::Ref<const Vector<double>>& logprob,
                                std::span<const int> alignment) {
  if (logprob.size() != static_cast<Index>(alignment.size()))
    throw ValidationError("logprob length " + std::to_string(logprob.size()) +
                          " does not match alignment of length " + std::to_string(alignment.size()));
  return word_membership(alignment) * logprob;
}

AttentionStack to_word_level_attention(const TensorBundle& bundle, const Record& r) {
  require_kind(r, Kind::Attention);
  const Index layers = r.shape[0], heads = r.shape[1], t = r.shape[2];
  auto values = bundle.values(r);
  AttentionStack out;
  out.layers = layers;
  out.heads = heads;
  for (Index l = 0; l < layers; ++l)
    for (Index h = 0; h < heads; ++h) {
      Matrix<double> raw = row_major(values, (l * heads + h) * t * t, t, t).cast<double>();
      out.slices.push_back(attention_to_words(raw, r.word_alignment));
    }
  return out;
}

ImpactStack to_word_level_impact(const TensorBundle& bundle, const Record& r) {
  require_kind(r, Kind::Impact);
  const Index layers = r.shape[0], t = r.shape[1];
  auto values = bundle.values(r);
  ImpactStack out;
  out.layers = layers;
  out.heads = 1;
  for (Index l = 0; l < layers; ++l) {
    Matrix<double> raw = row_major(values, l * t * t, t, t).cast<double>();
    out.slices.push_back(impact_to_words(raw, r.word_alignment));
  }
  return out;
}

HiddenStack to_word_level_hidden(const TensorBundle& bundle, const Record& r) {
  require_kind(r, Kind::Hidden);
  const Index layers = r.shape[0], t = r.shape[1], d = r.shape[2];
  auto values = bundle.values(r);
  HiddenStack out;
  out.layers = layers;
  out.heads = 1;
  for (Index l = 0; l < layers; ++l) {
    Matrix<double> raw = row_major(values, l * t * d, t, d).cast<double>();
    out.slices.push_back(hidden_to_words(raw, r.word_alignment));
  }
  return out;
}

Vector<double> to_word_level_logprob(const TensorBundle& bundle, const Record& r) {
  require_kind(r, Kind::Logprob);
  auto values = bundle.values(r);
  Vector<double> raw = Eigen::Map<const Eigen::VectorXf>(values.data(), r.shape[0]).cast<double>();
  return logprob_to_words(raw, r.word_alignment);
}

AttentionStack synth_attention_from_tree(const DepSentence& sentence, double signal) {
  if (!(signal > 0.0 && signal <= 1.0))
    throw ValidationError("signal must lie in (0, 1], got " + std::to_string(signal));
  validate(sentence);
  const Index n = sentence.size();
  AttentionStack out(1, 1, n, n);
  Matrix<double>& a = out(0, 0);
  const double floor = (1.0 - signal) / static_cast<double>(n);
  for (const auto& t : sentence.tokens) {
    const Index i = t.id - 1;
    if (t.head == 0) {
      a.row(i).setConstant(1.0 / static_cast<double>(n));
    } else {
      a.row(i).setConstant(floor);
      a(i, t.head - 1) += signal;
    }
  }
  return out;
}

} // namespace perturbkit
