#include "qgan/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include "qgan/errors.hpp"
#include "qgan/rng.hpp"

namespace qgan {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw TruncatedFile();
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& in) {
  std::uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_weights(const std::string& path, const std::vector<Tensor>& tensors) {
  std::set<std::string> seen;
  for (const Tensor& t : tensors) {
    if (t.name().empty()) throw InvalidParams("tensor names must be non-empty");
    if (!seen.insert(t.name()).second) throw DuplicateName("duplicate tensor name '" + t.name() + "'");
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  out.write(kWeightMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name().size()));
    out.write(t.name().data(), static_cast<std::streamsize>(t.name().size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t dim : t.shape()) put_u32(out, static_cast<std::uint32_t>(dim));
    for (double v : t.data()) put_f32(out, static_cast<float>(v));
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<Tensor> read_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  char magic[4];
  in.read(magic, 4);
  if (!in) throw TruncatedFile("file shorter than the magic");
  if (std::memcmp(magic, kWeightMagic, 4) != 0) throw BadMagic();

  std::uint32_t count = get_u32(in);
  std::vector<Tensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = get_u32(in);
    if (name_len > (1u << 20)) throw IoError("implausible name length, corrupt archive");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw TruncatedFile("file ends inside a tensor name");

    std::uint32_t rank = get_u32(in);
    if (rank > 64) throw IoError("implausible rank, corrupt archive");
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = get_u32(in);
      n *= shape[d];
      if (n > (1ull << 32)) throw IoError("implausible payload size, corrupt archive");
    }
    if (rank == 0) n = 0;

    std::vector<double> data(n);
    for (std::size_t j = 0; j < n; ++j) data[j] = static_cast<double>(get_f32(in));
    tensors.emplace_back(std::move(name), std::move(shape), std::move(data));
  }
  return tensors;
}

Histogram compute_histogram(const Tensor& tensor, const HistogramSpec& spec) {
  if (tensor.empty()) throw EmptyTensor();
  if (spec.bin_count < 2) throw InvalidParams("bin_count must be >= 2");

  double lo, hi;
  if (spec.range) {
    lo = spec.range->first;
    hi = spec.range->second;
    if (!(lo < hi)) throw InvalidParams("histogram range must satisfy lo < hi");
  } else {
    lo = min_value(tensor);
    hi = max_value(tensor);
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }

  const std::size_t bins = spec.bin_count;
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = i == bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  h.counts.assign(bins, 0);
  for (double v : tensor.data()) {
    double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
    auto idx = static_cast<long long>(std::floor(pos));
    idx = std::clamp<long long>(idx, 0, static_cast<long long>(bins) - 1);
    h.counts[static_cast<std::size_t>(idx)] += 1;
  }
  return h;
}

void export_histogram(const Tensor& tensor, const HistogramSpec& spec, const std::string& path) {
  Histogram h = compute_histogram(tensor, spec);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << format_number(h.edges[i]) << ',' << format_number(h.edges[i + 1]) << ',' << h.counts[i]
        << '\n';
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

Tensor random_tensor(RandomKind kind, std::size_t n, std::uint64_t seed, double sigma) {
  if (n < 1) throw InvalidParams("n must be >= 1");
  if (sigma <= 0.0) throw InvalidParams("sigma must be > 0");
  Rng rng(derive_seed(seed, "random_tensor"));
  std::vector<double> data(n);
  std::string name;
  switch (kind) {
    case RandomKind::Gaussian:
      name = "gaussian";
      for (double& v : data) v = rng.normal(0.0, sigma);
      break;
    case RandomKind::Uniform: {
      name = "uniform";
      double half_width = sigma * std::sqrt(3.0);
      for (double& v : data) v = rng.uniform(-half_width, half_width);
      break;
    }
    case RandomKind::Bimodal:
      name = "bimodal";
      for (double& v : data) {
        double center = (rng.next_u64() & 1ULL) ? 2.0 * sigma : -2.0 * sigma;
        v = center + rng.normal(0.0, sigma / 2.0);
      }
      break;
  }
  return Tensor::vector(std::move(name), std::move(data));
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace qgan
