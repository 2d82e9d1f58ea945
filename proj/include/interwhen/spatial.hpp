#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "interwhen/domain.hpp"
#include "interwhen/extraction.hpp"
#include "interwhen/trace.hpp"
#include "interwhen/verifier.hpp"

namespace interwhen {

// Constraint store for diagonal relations between named places. Each
// relation contributes one strict-order edge per axis (rows grow southward,
// columns grow eastward), so the store is a pair of directed graphs and
// consistency is acyclicity of both.
class RelationStore {
public:
    int intern(const std::string& name);
    std::optional<int> find(const std::string& name) const;
    const std::vector<std::string>& entities() const { return names_; }

    // Trial-adds both axis edges. If either closes a cycle the store is left
    // unchanged and false is returned.
    bool assert_relation(const DiagRelation& rel);

    const std::vector<DiagRelation>& asserted() const { return asserted_; }

    // Strict-order queries by reachability.
    bool row_less(const std::string& a, const std::string& b) const;
    bool col_less(const std::string& a, const std::string& b) const;

    struct Mark {
        std::size_t relations = 0;
    };
    Mark mark() const { return {asserted_.size()}; }
    void rollback(const Mark& m);

private:
    struct Edge {
        int from;
        int to;
    };
    bool reachable(const std::vector<std::vector<int>>& adj, int from, int to) const;
    void add_edge(std::vector<std::vector<int>>& adj, std::vector<Edge>& edges, int a, int b);
    void rebuild();

    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<int>> row_adj_, col_adj_;
    std::vector<Edge> row_edges_, col_edges_;
    std::vector<DiagRelation> asserted_;
};

// The diagonal relation the store entails between a and b, if both axes are
// determined.
std::optional<Diag> entailed_diag(const RelationStore& store, const std::string& a,
                                  const std::string& b);

// All entities x (other than anchor) with entailed_diag(x, anchor) == dir,
// in the store's interning order.
std::vector<std::string> entities_in_direction(const RelationStore& store, Diag dir,
                                               const std::string& anchor);

// Independent satisfiability check for a relation set: searches for integer
// coordinates realizing every relation (per-axis permutation search, no
// graph reasoning). Intended as a test oracle.
bool satisfiable_by_search(const std::vector<DiagRelation>& relations);

// Checks one restated relation against the known entity set and the store,
// asserting it on success.
Verdict verify_relation(RelationStore& store, const DiagRelation& rel,
                        const std::vector<std::string>& known_entities);

// Checks a concluded relation without growing the store. Diagonal claims
// must be consistent with everything asserted so far; cardinal claims pass
// only when both flanking diagonals are entailed (e.g. North needs both
// Northwest and Northeast).
Verdict verify_conclusion(RelationStore& store, const SpatialConclusionPayload& claim,
                          const std::vector<std::string>& known_entities);

// VerifierBinding over a relation store. When seed_givens is set the task's
// stated relations are asserted up front (and after every reset), so model
// restatements that contradict the problem are caught, not just internal
// contradictions.
std::unique_ptr<VerifierBinding> make_spatial_binding(std::vector<std::string> entities,
                                                      std::vector<DiagRelation> givens,
                                                      bool seed_givens = true);

}  // namespace interwhen
