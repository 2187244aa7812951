#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qgan/tensor.hpp"

namespace qgan {

// ============================================================================
// QGW1 weight archives
// ============================================================================
//
// Little-endian layout, bit-exact:
//   magic "QGW1" (4 bytes)
//   tensor_count (u32)
//   per tensor: name_len (u32), name (UTF-8 bytes), rank (u32),
//               dims (u32 x rank), payload (f32 x product(dims), row-major)
//
// In-memory values are 64-bit; payloads store the nearest 32-bit reals.

inline constexpr char kWeightMagic[4] = {'Q', 'G', 'W', '1'};

/// Throws DuplicateName on repeated tensor names, InvalidParams on empty
/// names, IoError when the file cannot be written.
void write_weights(const std::string& path, const std::vector<Tensor>& tensors);

/// Inverse of write_weights at 32-bit precision. Throws BadMagic,
/// TruncatedFile, IoError.
std::vector<Tensor> read_weights(const std::string& path);

// ============================================================================
// Histogram export
// ============================================================================

struct HistogramSpec {
  std::size_t bin_count = 80;
  std::optional<std::pair<double, double>> range;  // default: data min/max
};

struct Histogram {
  std::vector<double> edges;        // bin_count + 1 edges
  std::vector<std::size_t> counts;  // bin_count entries, sum = element count
};

/// Bin the tensor. Values equal to the upper edge land in the last bin;
/// values outside an explicit range are clamped into the edge bins so the
/// total mass is conserved. A degenerate default range (constant data) is
/// widened to [c - 0.5, c + 0.5].
Histogram compute_histogram(const Tensor& tensor, const HistogramSpec& spec);

/// CSV with header "bin_lo,bin_hi,count".
void export_histogram(const Tensor& tensor, const HistogramSpec& spec, const std::string& path);

// ============================================================================
// Deterministic test tensors
// ============================================================================

enum class RandomKind { Gaussian, Uniform, Bimodal };

/// Deterministic given (kind, n, seed, sigma). Gaussian is N(0, sigma^2);
/// Uniform is U(-sigma*sqrt(3), +sigma*sqrt(3)) (same standard deviation);
/// Bimodal mixes N(-2 sigma, (sigma/2)^2) and N(+2 sigma, (sigma/2)^2) with
/// a fair coin per sample.
Tensor random_tensor(RandomKind kind, std::size_t n, std::uint64_t seed, double sigma = 0.02);

/// Fixed decimal-significand formatting used by every CSV writer, so that
/// repeated seeded runs produce byte-identical artifacts.
std::string format_number(double v);

}  // namespace qgan
