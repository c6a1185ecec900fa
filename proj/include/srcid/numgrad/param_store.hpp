#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "srcid/numgrad/tensor.hpp"

namespace srcid::numgrad {

// Named parameters with gradient accumulators of identical shape. Entries keep
// stable addresses and iterate in insertion order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Entry& add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  Entry& entry(std::string_view name);
  const Entry& entry(std::string_view name) const;
  Tensor& value(std::string_view name) { return entry(name).value; }
  const Tensor& value(std::string_view name) const { return entry(name).value; }
  const Tensor& grad(std::string_view name) const { return entry(name).grad; }

  void zero_grads();
  std::size_t size() const { return entries_.size(); }
  std::size_t num_scalars() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.cbegin(); }
  auto end() const { return entries_.cend(); }

  std::uint64_t step = 0;

  // Values and step counter; gradients are not persisted.
  void save(std::ostream& os) const;
  static ParamStore load(std::istream& is);

  // Same names, shapes, and bit-identical values.
  bool same_values(const ParamStore& other) const;

 private:
  std::vector<std::unique_ptr<Entry>> entries_;
  std::unordered_map<std::string, Entry*> index_;
};

}  // namespace srcid::numgrad
