#pragma once

// Graded-lex multi-index tables for dense truncated jets in m real variables.
// Contexts are immutable and shared; the multiplication table is grouped by
// output degree so truncated products can stop at the trusted order.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace crgeo {

inline long long binom_ll(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  long long r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

class JetContext {
 public:
  JetContext(int num_vars, int order) : num_vars_(num_vars), order_(order) {
    if (num_vars < 1 || num_vars > 15 || order < 0 || order > 15)
      throw std::invalid_argument("jet context: unsupported num_vars/order");
    deg_first_.assign(order_ + 2, 0);
    std::vector<uint8_t> e(num_vars_, 0);
    for (int d = 0; d <= order_; ++d) {
      deg_first_[d] = static_cast<int>(exps_.size());
      emit_degree(e, 0, d);
    }
    deg_first_[order_ + 1] = static_cast<int>(exps_.size());
    index_.reserve(exps_.size() * 2);
    for (int i = 0; i < static_cast<int>(exps_.size()); ++i)
      index_.emplace(pack(exps_[i]), i);
  }

  int num_vars() const { return num_vars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(exps_.size()); }
  int degree(int idx) const { return deg_of_[idx]; }
  int first_of_degree(int d) const { return deg_first_[d]; }
  const std::vector<uint8_t>& exponents(int idx) const { return exps_[idx]; }

  // -1 when the total degree exceeds the context order.
  int index_of(const std::vector<uint8_t>& e) const {
    int d = 0;
    for (uint8_t v : e) d += v;
    if (d > order_) return -1;
    auto it = index_.find(pack(e));
    return it == index_.end() ? -1 : it->second;
  }

  int index_shift_up(int idx, int var) const {
    std::vector<uint8_t> e = exps_[idx];
    e[var] += 1;
    return index_of(e);
  }

  int index_shift_down(int idx, int var) const {
    if (exps_[idx][var] == 0) return -1;
    std::vector<uint8_t> e = exps_[idx];
    e[var] -= 1;
    return index_of(e);
  }

  struct Triple {
    int32_t a, b, out;
  };

  // mul_by_degree()[d] lists all coefficient pairs landing in output degree d.
  const std::vector<std::vector<Triple>>& mul_by_degree() const {
    if (mul_.empty()) {
      mul_.resize(order_ + 1);
      const int n = size();
      for (int a = 0; a < n; ++a) {
        const int da = deg_of_[a];
        for (int b = 0; b < n && deg_of_[b] + da <= order_; ++b) {
          std::vector<uint8_t> e = exps_[a];
          for (int v = 0; v < num_vars_; ++v) e[v] += exps_[b][v];
          const int out = index_of(e);
          mul_[da + deg_of_[b]].push_back({a, b, out});
        }
      }
    }
    return mul_;
  }

 private:
  void emit_degree(std::vector<uint8_t>& e, int var, int rem) {
    if (var == num_vars_ - 1) {
      e[var] = static_cast<uint8_t>(rem);
      exps_.push_back(e);
      deg_of_.push_back(static_cast<int>(rem + accumulated(e, var)));
      e[var] = 0;
      return;
    }
    for (int v = rem; v >= 0; --v) {
      e[var] = static_cast<uint8_t>(v);
      emit_degree(e, var + 1, rem - v);
    }
    e[var] = 0;
  }

  static int accumulated(const std::vector<uint8_t>& e, int upto) {
    int s = 0;
    for (int i = 0; i < upto; ++i) s += e[i];
    return s;
  }

  static uint64_t pack(const std::vector<uint8_t>& e) {
    uint64_t k = 0;
    for (uint8_t v : e) k = (k << 4) | (v & 0xF);
    return k;
  }

  int num_vars_, order_;
  std::vector<std::vector<uint8_t>> exps_;
  std::vector<int> deg_of_;
  std::vector<int> deg_first_;
  std::unordered_map<uint64_t, int> index_;
  mutable std::vector<std::vector<Triple>> mul_;
};

using ContextPtr = std::shared_ptr<const JetContext>;

// Contexts are cached per (num_vars, order) so repeated scenario runs share
// the multiplication tables.
inline ContextPtr get_context(int num_vars, int order) {
  static std::map<std::pair<int, int>, ContextPtr> cache;
  auto key = std::make_pair(num_vars, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto ctx = std::make_shared<JetContext>(num_vars, order);
  cache.emplace(key, ctx);
  return ctx;
}

}  // namespace crgeo
