#include "interwhen/verifier.hpp"

#include "interwhen/game24.hpp"

namespace interwhen {

namespace {

class CallbackBinding final : public VerifierBinding {
public:
    CallbackBinding(std::string id, std::unique_ptr<Extractor> extractor,
                    std::function<Verdict(const ExtractedState&)> check)
        : id_(std::move(id)), extractor_(std::move(extractor)), check_(std::move(check)) {}

    std::string id() const override { return id_; }
    const Extractor& extractor() const override { return *extractor_; }

    Verdict check(const ExtractedState& state) override {
        Verdict v = check_(state);
        v.state_span = state.span;
        return v;
    }

    void reset() override {}

private:
    std::string id_;
    std::unique_ptr<Extractor> extractor_;
    std::function<Verdict(const ExtractedState&)> check_;
};

class Game24Binding final : public VerifierBinding {
public:
    Game24Binding(std::vector<long long> inputs, long long target)
        : inputs_(std::move(inputs)), target_(target),
          extractor_(make_equation_extractor(inputs_)) {}

    std::string id() const override { return "game24"; }
    const Extractor& extractor() const override { return *extractor_; }

    Verdict check(const ExtractedState& state) override {
        Verdict v;
        if (state.parse_failed) {
            v.pass = false;
            v.feedback = "the equation could not be read (" + state.parse_error + ")";
        } else if (state.kind == StateKind::Equation) {
            v = verify_game24(inputs_, std::get<EquationPayload>(state.payload).expression,
                              target_);
        } else {
            v.pass = true;
        }
        v.state_span = state.span;
        return v;
    }

    void reset() override {}

private:
    std::vector<long long> inputs_;
    long long target_;
    std::unique_ptr<Extractor> extractor_;
};

}  // namespace

std::unique_ptr<VerifierBinding> make_callback_binding(
    std::string id, std::unique_ptr<Extractor> extractor,
    std::function<Verdict(const ExtractedState&)> check) {
    return std::make_unique<CallbackBinding>(std::move(id), std::move(extractor),
                                             std::move(check));
}

std::unique_ptr<VerifierBinding> make_game24_binding(std::vector<long long> inputs,
                                                     long long target) {
    return std::make_unique<Game24Binding>(std::move(inputs), target);
}

}  // namespace interwhen
