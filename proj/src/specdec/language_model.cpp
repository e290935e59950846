#include "edgespec/specdec/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "edgespec/common/error.hpp"
#include "edgespec/common/rng.hpp"

namespace edgespec::specdec {

namespace {

constexpr std::uint64_t kBaseSalt = 0x7A5C3E1F00000001ULL;
constexpr std::uint64_t kNoiseSalt = 0x1D2B3C4D00000002ULL;

double hashed_normal(std::uint64_t key) {
  const double u1 = 1.0 - unit_from_bits(splitmix64(key));  // (0, 1]
  const double u2 = unit_from_bits(splitmix64(key ^ 0xA5A5A5A5A5A5A5A5ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

SyntheticLM::SyntheticLM(std::uint64_t seed, int vocab_size, double smoothing, double sharpness)
    : seed_(seed), vocab_size_(vocab_size), smoothing_(smoothing), sharpness_(sharpness) {
  require(vocab_size >= 2, "SyntheticLM: vocab_size must be >= 2");
  require(smoothing >= 0.0 && smoothing <= 1.0, "SyntheticLM: smoothing must lie in [0, 1]");
  require(sharpness > 0.0 && std::isfinite(sharpness), "SyntheticLM: sharpness must be > 0");
}

SyntheticLM SyntheticLM::with_smoothing(double smoothing) const {
  return SyntheticLM(seed_, vocab_size_, smoothing, sharpness_);
}

Distribution SyntheticLM::softmax_for(std::uint64_t prefix_hash, std::uint64_t salt) const {
  Distribution logits(static_cast<std::size_t>(vocab_size_));
  const std::uint64_t base = hash_combine(prefix_hash, salt);
  for (int v = 0; v < vocab_size_; ++v) {
    logits[v] = sharpness_ * hashed_normal(hash_combine(base, static_cast<std::uint64_t>(v)));
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp(l - peak);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  return logits;
}

Distribution SyntheticLM::next_distribution(std::span<const Token> prefix) const {
  std::uint64_t h = splitmix64(seed_);
  h = hash_combine(h, prefix.size());
  for (Token t : prefix) h = hash_combine(h, static_cast<std::uint64_t>(t));

  Distribution dist = softmax_for(h, kBaseSalt);
  if (smoothing_ > 0.0) {
    const Distribution noise = softmax_for(h, kNoiseSalt);
    for (std::size_t v = 0; v < dist.size(); ++v) {
      dist[v] = (1.0 - smoothing_) * dist[v] + smoothing_ * noise[v];
    }
  }
  return dist;
}

Token argmax(std::span<const double> dist) {
  require(!dist.empty(), "argmax: empty distribution");
  // First maximum wins on ties.
  return static_cast<Token>(std::max_element(dist.begin(), dist.end()) - dist.begin());
}

Token sample_with(std::span<const double> dist, double u) {
  require(!dist.empty(), "sample_with: empty distribution");
  double cumulative = 0.0;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    cumulative += dist[v];
    if (u < cumulative) return static_cast<Token>(v);
  }
  // Rounding left u above the final cumulative mass: return the last
  // token that carries any probability.
  for (std::size_t v = dist.size(); v-- > 0;) {
    if (dist[v] > 0.0) return static_cast<Token>(v);
  }
  return static_cast<Token>(dist.size() - 1);
}

}  // namespace edgespec::specdec
