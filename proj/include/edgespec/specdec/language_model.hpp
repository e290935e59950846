#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace edgespec::specdec {

using Token = std::int32_t;
using Distribution = std::vector<double>;

/// Prefix -> next-token distribution. Implementations must be pure.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual int vocab_size() const = 0;
  virtual Distribution next_distribution(std::span<const Token> prefix) const = 0;
};

/// Deterministic stand-in for a draft or target model.
///
/// The base distribution is a softmax over hash-derived standard-normal
/// logits keyed on (seed, prefix). A model with smoothing s emits
/// (1 - s) * base + s * noise, where noise is a second softmax keyed on a
/// different salt of the same prefix. Two models with the same seed share
/// the base, so smoothing = 0 reproduces the target exactly and larger
/// smoothing lowers the draft/target agreement.
class SyntheticLM final : public LanguageModel {
 public:
  explicit SyntheticLM(std::uint64_t seed, int vocab_size = 64, double smoothing = 0.0,
                       double sharpness = 3.0);

  int vocab_size() const override { return vocab_size_; }
  Distribution next_distribution(std::span<const Token> prefix) const override;

  std::uint64_t seed() const { return seed_; }
  double smoothing() const { return smoothing_; }
  double sharpness() const { return sharpness_; }

  /// Draft model paired with this one: same seed and sharpness.
  SyntheticLM with_smoothing(double smoothing) const;

 private:
  Distribution softmax_for(std::uint64_t prefix_hash, std::uint64_t salt) const;

  std::uint64_t seed_;
  int vocab_size_;
  double smoothing_;
  double sharpness_;
};

Token argmax(std::span<const double> dist);

/// Inverse-CDF draw with a uniform variate in [0, 1).
Token sample_with(std::span<const double> dist, double u);

}  // namespace edgespec::specdec
