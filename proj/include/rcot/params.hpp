#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rcot/errors.hpp"

namespace rcot {

// One named parameter array plus its gradient accumulator of equal shape.
struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t count() const { return value.size(); }
};

// Ordered, named collection of parameter arrays. Entry order is insertion
// order and is part of the serialized format, so it must stay deterministic.
// Entries live in a deque so references returned by add() stay valid across
// later insertions.
class ParamStore {
 public:
  ParamEntry& add(std::string name, std::vector<std::size_t> shape) {
    if (index_.count(name))
      throw usage_error("ParamStore: duplicate entry '" + name + "'");
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n == 0) throw dimension_error("ParamStore: zero-sized entry '" + name + "'");
    index_[name] = entries_.size();
    entries_.push_back(ParamEntry{std::move(name), std::move(shape),
                                  std::vector<double>(n, 0.0),
                                  std::vector<double>(n, 0.0)});
    return entries_.back();
  }

  bool has(std::string_view name) const { return index_.count(std::string(name)) != 0; }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end())
      throw usage_error("ParamStore: no entry named '" + std::string(name) + "'");
    return it->second;
  }

  ParamEntry& at(std::string_view name) { return entries_[index_of(name)]; }
  const ParamEntry& at(std::string_view name) const {
    return const_cast<ParamStore*>(this)->at(name);
  }

  ParamEntry& entry(std::size_t i) { return entries_[i]; }
  const ParamEntry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.count();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_)
      std::fill(e.grad.begin(), e.grad.end(), 0.0);
  }

 private:
  std::deque<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace rcot
