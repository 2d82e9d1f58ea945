#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "interwhen/domain.hpp"
#include "interwhen/trace.hpp"

namespace interwhen {

enum class StateKind {
    MazeLocate,
    MazeStep,
    SpatialRelations,
    SpatialConclusion,
    AnswerProposal,
    BoxedAnswer,
    Equation,
    Artifact,
};

std::string_view state_kind_name(StateKind k);

struct MazeLocatePayload {
    std::optional<GridPos> s_pos;
    std::optional<GridPos> e_pos;
};

struct MazeStepPayload {
    std::optional<int> index;
    std::optional<Direction> move_dir;
    std::optional<GridPos> from_pos;
    std::optional<GridPos> to_pos;
    // Optional report lines under the step header.
    std::optional<GridPos> current_pos;
    bool prev_dir_line = false;  // line present, possibly stating "NONE"
    std::optional<Direction> prev_dir;
    std::optional<Direction> cur_dir;
    std::optional<TurnType> claimed_turn;
    struct Counts {
        int right = 0;
        int left = 0;
        std::optional<int> total;
    };
    std::optional<Counts> counts;
};

struct SpatialRelationsPayload {
    std::vector<DiagRelation> relations;
};

struct SpatialConclusionPayload {
    std::string subject;
    Dir8 dir = Dir8::NW;
    std::string object;
};

struct AnswerPayload {
    std::string text;  // the option token or the boxed content, verbatim
};

struct EquationPayload {
    std::string expression;
};

struct ArtifactPayload {
    std::string family;
    std::string body;
};

using StatePayload = std::variant<MazeLocatePayload, MazeStepPayload, SpatialRelationsPayload,
                                  SpatialConclusionPayload, AnswerPayload, EquationPayload,
                                  ArtifactPayload>;

// One verifiable intermediate state lifted out of the trace text. The span
// covers exactly the matched bytes (for block formats, through the final
// line's newline when present). A state whose surface format matched but
// whose fields did not parse is still reported, flagged with parse_failed
// and a human-readable parse_error.
struct ExtractedState {
    StateKind kind = StateKind::AnswerProposal;
    StatePayload payload;
    Span span;
    bool parse_failed = false;
    std::string parse_error;
};

struct ScanResult {
    std::vector<ExtractedState> states;
    std::size_t new_cursor = 0;
};

// A streaming-safe pattern matcher over trace text. scan() inspects
// text[cursor..) for complete states and reports them in order of
// appearance, together with the furthest cursor that provably skips no
// state that could still complete once more text arrives. With final=true
// the text is known to be whole and nothing is withheld.
//
// Determinism contract: the concatenation of states over any increasing
// cursor schedule equals a single scan of the full text. Text before the
// cursor may be read (it is immutable) but never re-reported.
class Extractor {
public:
    virtual ~Extractor() = default;
    virtual std::string id() const = 0;
    virtual ScanResult scan(std::string_view text, std::size_t cursor, bool final) const = 0;
};

struct AnswerExtractorOptions {
    // Trigger phrases, matched case-insensitively. \boxed{...} is always on.
    std::vector<std::string> phrases = {"the answer is", "answer:", "final answer"};
    // Single-letter options accepted after a trigger phrase.
    std::string letters = "ABCD";
    // Literal option texts accepted after a trigger phrase (matched longest
    // first, case-insensitively).
    std::vector<std::string> option_texts;
};

std::unique_ptr<Extractor> make_answer_extractor(AnswerExtractorOptions opts = {});

// Reports maximal arithmetic character runs whose operand multiset equals
// `inputs`. An equals sign splits a run into segments; the first segment
// containing an operator and the right numbers is the reported expression,
// so both "6*4=24" and "24 = 6*4" yield "6*4".
std::unique_ptr<Extractor> make_equation_extractor(std::vector<long long> inputs);

std::unique_ptr<Extractor> make_maze_extractor();

// `entities` (optional) tightens subject/object boundary detection in
// conclusion lines; unknown names are still reported for the verifier to
// reject.
std::unique_ptr<Extractor> make_spatial_extractor(std::vector<std::string> entities = {});

struct ArtifactFamily {
    std::string name;
    std::vector<std::string> phrases;
};

// Reports fenced code blocks that follow one of a family's trigger phrases.
std::unique_ptr<Extractor> make_artifact_extractor(std::vector<ArtifactFamily> families);

// Scans the unscanned tail of the trace with one extractor and advances the
// trace cursor. Convenience wrapper used by single-binding callers; the
// monitor keeps per-binding cursors itself.
std::vector<ExtractedState> scan_for_states(ReasoningTrace& trace, const Extractor& ex,
                                            bool final = false);

}  // namespace interwhen
