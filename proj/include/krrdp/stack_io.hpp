#pragma once

#include "krrdp/bellman.hpp"

#include <filesystem>
#include <iosfwd>

namespace krrdp {

// Versioned text format. Reals are written as C99 hex floats, so a
// save/load round trip reproduces every prediction bit for bit.
//
//   krrdp-stack 1
//   dim <d>  horizon <T>  dt/rate/sigma/rho/x0  payoff <kind> <strike>
//   stage <t>: kernel, lambda, clip, offset, centers <m> + m rows, coefficients
//   end
void write_stack(std::ostream& out, const ValueFunctionStack& stack);
ValueFunctionStack read_stack(std::istream& in);

void save_stack(const std::filesystem::path& path, const ValueFunctionStack& stack);
ValueFunctionStack load_stack(const std::filesystem::path& path);

}  // namespace krrdp
