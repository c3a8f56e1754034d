#include "oddball/fault.hpp"

#include <atomic>

namespace oddball::fault {

namespace {
std::atomic<Kind> g_active{Kind::none};
}

void inject(Kind k) { g_active.store(k, std::memory_order_relaxed); }
Kind active() { return g_active.load(std::memory_order_relaxed); }

std::optional<Kind> parse(std::string_view name) {
  if (name == "none") return Kind::none;
  if (name == "backward-sign") return Kind::backward_sign;
  if (name == "softmax-unnormalized") return Kind::softmax_unnormalized;
  if (name == "sampler-uniform") return Kind::sampler_uniform;
  return std::nullopt;
}

const char* name(Kind k) {
  switch (k) {
    case Kind::none: return "none";
    case Kind::backward_sign: return "backward-sign";
    case Kind::softmax_unnormalized: return "softmax-unnormalized";
    case Kind::sampler_uniform: return "sampler-uniform";
  }
  return "none";
}

}  // namespace oddball::fault
