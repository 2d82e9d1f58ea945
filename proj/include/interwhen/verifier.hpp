#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "interwhen/extraction.hpp"
#include "interwhen/trace.hpp"

namespace interwhen {

// Pairs an extractor with a checking discipline and whatever accumulated
// context the checks need (walk position, relation store, ...). The monitor
// feeds every reported state through check() in text order; a passing state
// becomes part of the context, a failing one yields feedback. reset() drops
// the context so the same binding can re-verify a finished trace from
// scratch.
class VerifierBinding {
public:
    virtual ~VerifierBinding() = default;
    virtual std::string id() const = 0;
    virtual const Extractor& extractor() const = 0;
    virtual Verdict check(const ExtractedState& state) = 0;
    virtual void reset() = 0;
};

// Stateless binding around an arbitrary check function; reset is a no-op.
std::unique_ptr<VerifierBinding> make_callback_binding(
    std::string id, std::unique_ptr<Extractor> extractor,
    std::function<Verdict(const ExtractedState&)> check);

// Binding that checks every reported equation against the puzzle inputs.
std::unique_ptr<VerifierBinding> make_game24_binding(std::vector<long long> inputs,
                                                     long long target = 24);

}  // namespace interwhen
