#include "srcid/numgrad/param_store.hpp"

#include "srcid/error.hpp"
#include "srcid/io/binary.hpp"

namespace srcid::numgrad {

ParamStore::ParamStore(const ParamStore& other) : step(other.step) {
  for (const auto& e : other.entries_) add(e->name, e->value).grad = e->grad;
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

ParamStore::Entry& ParamStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name " + name);
  auto e = std::make_unique<Entry>();
  e->name = std::move(name);
  e->grad = Tensor(value.rows(), value.cols());
  e->value = std::move(value);
  Entry* raw = e.get();
  index_.emplace(raw->name, raw);
  entries_.push_back(std::move(e));
  return *raw;
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

ParamStore::Entry& ParamStore::entry(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ConfigError("unknown parameter " + std::string(name));
  return *it->second;
}

const ParamStore::Entry& ParamStore::entry(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ConfigError("unknown parameter " + std::string(name));
  return *it->second;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e->grad.fill(0.0);
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e->value.size();
  return n;
}

void ParamStore::save(std::ostream& os) const {
  io::write_u64(os, step);
  io::write_u32(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    io::write_string(os, e->name);
    io::write_tensor(os, e->value);
  }
}

ParamStore ParamStore::load(std::istream& is) {
  ParamStore ps;
  ps.step = io::read_u64(is);
  const auto n = io::read_u32(is);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto name = io::read_string(is);
    ps.add(std::move(name), io::read_tensor(is));
  }
  return ps;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i]->name != other.entries_[i]->name) return false;
    if (!(entries_[i]->value == other.entries_[i]->value)) return false;
  }
  return true;
}

}  // namespace srcid::numgrad
