#pragma once

#include <optional>
#include <string_view>

namespace oddball::fault {

// Deliberate-fault hooks for the mutation checks in `oddball verify`.
// Production runs leave this at none; the verify harness injects one kind
// and expects the corresponding self-check to fail.
enum class Kind {
  none,
  backward_sign,         // flips the output-layer error sign in backward()
  softmax_unnormalized,  // skips the softmax normalization divide
  sampler_uniform,       // sample_index() ignores its distribution
};

void inject(Kind k);
Kind active();

std::optional<Kind> parse(std::string_view name);
const char* name(Kind k);

}  // namespace oddball::fault
