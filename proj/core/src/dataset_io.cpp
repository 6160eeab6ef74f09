#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "nmf/errors.hpp"
#include "nmf/simulate.hpp"

namespace nmf {
namespace {

constexpr char kMagic[5] = {'N', 'M', 'F', 'D', '1'};

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidArgument("dataset file is truncated");
  return to_little(v);
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
  const auto n = ds.X.rows();
  const auto p = ds.X.cols();
  if (n > std::numeric_limits<std::uint32_t>::max() || p > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("dataset dimensions exceed the file format");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put(os, static_cast<std::uint32_t>(n));
  put(os, static_cast<std::uint32_t>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) put(os, ds.X(i, j));
  }
  for (Eigen::Index i = 0; i < n; ++i) put(os, ds.y(i));
  for (Eigen::Index j = 0; j < p; ++j) put(os, ds.beta_star(j));
  if (!os) throw InvalidArgument("write to " + path + " failed");
}

Dataset load_dataset(const std::string& path, double sigma2) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  char magic[5];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InvalidArgument(path + " is not an NMFD1 dataset");
  }
  const auto n = static_cast<Eigen::Index>(get<std::uint32_t>(is));
  const auto p = static_cast<Eigen::Index>(get<std::uint32_t>(is));
  Dataset ds;
  ds.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) ds.X(i, j) = get<double>(is);
  }
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) ds.y(i) = get<double>(is);
  ds.beta_star.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) ds.beta_star(j) = get<double>(is);
  ds.epsilon = ds.y - ds.X * ds.beta_star;
  ds.d = ds.X.colwise().squaredNorm().transpose() / sigma2;
  return ds;
}

}  // namespace nmf
