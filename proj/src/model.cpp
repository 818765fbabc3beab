#include "iat/model.hpp"

#include <bit>
#include <cstring>

namespace iat {

void Fnv1a::update(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    state_ ^= bytes[i];
    state_ *= 0x100000001b3ULL;
  }
}

template <class T>
CodecModel<T>::CodecModel(const inn::ArchitectureConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  transform_ = inn::Transform<T>(params_, config_, rng);
  hyper_ = entropy::HyperPrior<T>(params_, config_, rng);
  zprior_ = entropy::ZPrior<T>(params_, config_.hyper_channels);
}

template <class T>
std::uint64_t CodecModel<T>::hash() const {
  Fnv1a h;
  const std::string arch = config_.to_key_values().to_text();
  h.update(arch.data(), arch.size());
  for (const auto& p : params_.items()) {
    h.update(p.name.data(), p.name.size());
    for (const T v : p.tensor.data()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const unsigned char le[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                   static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
      h.update(le, 4);
    }
  }
  return h.digest();
}

template <class T>
void CodecModel<T>::randomize(Rng& rng, double scale) {
  for (auto& p : params_.items()) {
    auto values = Tensor<T>(p.tensor).mutable_data();
    for (auto& v : values) v = static_cast<T>(rng.uniform(-scale, scale));
  }
}

template <class T>
template <class U>
void CodecModel<T>::copy_from(const CodecModel<U>& other) {
  const auto& mine = params_.items();
  const auto& theirs = other.parameters().items();
  if (mine.size() != theirs.size()) throw ShapeError("copy_from: parameter count differs");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].name != theirs[i].name || mine[i].tensor.shape() != theirs[i].tensor.shape()) {
      throw ShapeError("copy_from: parameter " + mine[i].name + " does not match " + theirs[i].name);
    }
    auto dst = Tensor<T>(mine[i].tensor).mutable_data();
    const auto src = theirs[i].tensor.data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<T>(src[j]);
  }
}

template class CodecModel<float>;
template class CodecModel<double>;
template void CodecModel<float>::copy_from(const CodecModel<double>&);
template void CodecModel<double>::copy_from(const CodecModel<float>&);
template void CodecModel<float>::copy_from(const CodecModel<float>&);
template void CodecModel<double>::copy_from(const CodecModel<double>&);

}  // namespace iat
