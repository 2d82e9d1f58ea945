#include "interwhen/spatial.hpp"

#include <algorithm>
#include <cctype>

namespace interwhen {

namespace {

std::string lower_copy(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// row edge: (a before b) means row(a) < row(b); same for columns.
struct AxisEdges {
    int row_from, row_to;
    int col_from, col_to;
};

AxisEdges axis_edges(Diag d, int s, int o) {
    switch (d) {
        case Diag::NW: return {s, o, s, o};
        case Diag::NE: return {s, o, o, s};
        case Diag::SW: return {o, s, s, o};
        case Diag::SE: return {o, s, o, s};
    }
    return {s, o, s, o};
}

}  // namespace

int RelationStore::intern(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    names_.push_back(name);
    index_.emplace(name, id);
    row_adj_.emplace_back();
    col_adj_.emplace_back();
    return id;
}

std::optional<int> RelationStore::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool RelationStore::reachable(const std::vector<std::vector<int>>& adj, int from, int to) const {
    if (from == to) return false;
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        for (int m : adj[n]) {
            if (m == to) return true;
            if (!seen[m]) {
                seen[m] = 1;
                stack.push_back(m);
            }
        }
    }
    return false;
}

void RelationStore::add_edge(std::vector<std::vector<int>>& adj, std::vector<Edge>& edges, int a,
                             int b) {
    adj[a].push_back(b);
    edges.push_back({a, b});
}

bool RelationStore::assert_relation(const DiagRelation& rel) {
    std::size_t names_before = names_.size();
    int s = intern(rel.subject);
    int o = intern(rel.object);
    auto undo_names = [&] {
        while (names_.size() > names_before) {
            index_.erase(names_.back());
            names_.pop_back();
            row_adj_.pop_back();
            col_adj_.pop_back();
        }
    };
    if (s == o) {
        undo_names();
        return false;
    }
    AxisEdges e = axis_edges(rel.dir, s, o);
    // a new edge a->b closes a cycle iff b already reaches a
    if (reachable(row_adj_, e.row_to, e.row_from) || reachable(col_adj_, e.col_to, e.col_from)) {
        undo_names();
        return false;
    }
    add_edge(row_adj_, row_edges_, e.row_from, e.row_to);
    add_edge(col_adj_, col_edges_, e.col_from, e.col_to);
    asserted_.push_back(rel);
    return true;
}

bool RelationStore::row_less(const std::string& a, const std::string& b) const {
    auto ia = find(a);
    auto ib = find(b);
    if (!ia || !ib) return false;
    return reachable(row_adj_, *ia, *ib);
}

bool RelationStore::col_less(const std::string& a, const std::string& b) const {
    auto ia = find(a);
    auto ib = find(b);
    if (!ia || !ib) return false;
    return reachable(col_adj_, *ia, *ib);
}

void RelationStore::rollback(const Mark& m) {
    std::vector<DiagRelation> keep(asserted_.begin(), asserted_.begin() + m.relations);
    names_.clear();
    index_.clear();
    row_adj_.clear();
    col_adj_.clear();
    row_edges_.clear();
    col_edges_.clear();
    asserted_.clear();
    for (const auto& rel : keep) assert_relation(rel);
}

std::optional<Diag> entailed_diag(const RelationStore& store, const std::string& a,
                                  const std::string& b) {
    bool n = store.row_less(a, b);
    bool s = store.row_less(b, a);
    bool w = store.col_less(a, b);
    bool e = store.col_less(b, a);
    if (n && w) return Diag::NW;
    if (n && e) return Diag::NE;
    if (s && w) return Diag::SW;
    if (s && e) return Diag::SE;
    return std::nullopt;
}

std::vector<std::string> entities_in_direction(const RelationStore& store, Diag dir,
                                               const std::string& anchor) {
    std::vector<std::string> out;
    for (const auto& name : store.entities()) {
        if (name == anchor) continue;
        if (entailed_diag(store, name, anchor) == dir) out.push_back(name);
    }
    return out;
}

bool satisfiable_by_search(const std::vector<DiagRelation>& relations) {
    std::vector<std::string> names;
    auto id_of = [&](const std::string& n) {
        auto it = std::find(names.begin(), names.end(), n);
        if (it != names.end()) return static_cast<int>(it - names.begin());
        names.push_back(n);
        return static_cast<int>(names.size() - 1);
    };
    // (before, after) pairs per axis
    std::vector<std::pair<int, int>> row_lt, col_lt;
    for (const auto& rel : relations) {
        int s = id_of(rel.subject);
        int o = id_of(rel.object);
        if (s == o) return false;
        AxisEdges e = axis_edges(rel.dir, s, o);
        row_lt.emplace_back(e.row_from, e.row_to);
        col_lt.emplace_back(e.col_from, e.col_to);
    }
    int n = static_cast<int>(names.size());
    auto axis_ok = [&](const std::vector<std::pair<int, int>>& lt) {
        std::vector<int> rank(n);
        for (int i = 0; i < n; ++i) rank[i] = i;
        std::vector<int> pos(n);
        do {
            for (int i = 0; i < n; ++i) pos[rank[i]] = i;
            bool ok = true;
            for (const auto& [a, b] : lt)
                if (pos[a] >= pos[b]) {
                    ok = false;
                    break;
                }
            if (ok) return true;
        } while (std::next_permutation(rank.begin(), rank.end()));
        return false;
    };
    return axis_ok(row_lt) && axis_ok(col_lt);
}

namespace {

std::string render_relation(const std::string& subject, std::string_view dir,
                            const std::string& object) {
    return subject + " is " + std::string(dir) + " of " + object;
}

std::optional<std::string> unknown_entity(const std::vector<std::string>& known,
                                          const std::string& name) {
    if (known.empty()) return std::nullopt;
    std::string want = lower_copy(name);
    for (const auto& k : known)
        if (lower_copy(k) == want) return std::nullopt;
    return name;
}

}  // namespace

Verdict verify_relation(RelationStore& store, const DiagRelation& rel,
                        const std::vector<std::string>& known_entities) {
    Verdict v;
    v.pass = false;
    for (const auto& name : {rel.subject, rel.object}) {
        if (auto bad = unknown_entity(known_entities, name)) {
            v.feedback = "there is no location called '" + *bad + "' in the problem";
            return v;
        }
    }
    if (rel.subject == rel.object) {
        v.feedback = "a location cannot be " + std::string(diag_name(rel.dir)) + " of itself";
        return v;
    }
    if (!store.assert_relation(rel)) {
        v.feedback = "the relation '" +
                     render_relation(rel.subject, diag_name(rel.dir), rel.object) +
                     "' contradicts the stated relations; re-read the problem statement";
        return v;
    }
    v.pass = true;
    return v;
}

Verdict verify_conclusion(RelationStore& store, const SpatialConclusionPayload& claim,
                          const std::vector<std::string>& known_entities) {
    Verdict v;
    v.pass = false;
    for (const auto& name : {claim.subject, claim.object}) {
        if (auto bad = unknown_entity(known_entities, name)) {
            v.feedback = "there is no location called '" + *bad + "' in the problem";
            return v;
        }
    }
    if (claim.subject == claim.object) {
        v.feedback = "a location cannot be " + std::string(dir8_name(claim.dir)) + " of itself";
        return v;
    }
    if (is_diagonal(claim.dir)) {
        DiagRelation rel{claim.subject, to_diag(claim.dir), claim.object};
        auto m = store.mark();
        bool ok = store.assert_relation(rel);
        if (ok) store.rollback(m);
        if (!ok) {
            std::string msg = "'" +
                              render_relation(claim.subject, dir8_name(claim.dir), claim.object) +
                              "' contradicts the stated relations";
            if (auto actual = entailed_diag(store, claim.subject, claim.object))
                msg += "; they entail that " +
                       render_relation(claim.subject, diag_name(*actual), claim.object);
            v.feedback = std::move(msg);
            return v;
        }
        v.pass = true;
        return v;
    }
    // A cardinal claim needs both flanking diagonals entailed.
    Diag first, second;
    switch (claim.dir) {
        case Dir8::N: first = Diag::NW, second = Diag::NE; break;
        case Dir8::S: first = Diag::SW, second = Diag::SE; break;
        case Dir8::E: first = Diag::NE, second = Diag::SE; break;
        default: first = Diag::NW, second = Diag::SW; break;
    }
    auto has = [&](Diag d) {
        bool row_ok = false, col_ok = false;
        switch (d) {
            case Diag::NW:
                row_ok = store.row_less(claim.subject, claim.object);
                col_ok = store.col_less(claim.subject, claim.object);
                break;
            case Diag::NE:
                row_ok = store.row_less(claim.subject, claim.object);
                col_ok = store.col_less(claim.object, claim.subject);
                break;
            case Diag::SW:
                row_ok = store.row_less(claim.object, claim.subject);
                col_ok = store.col_less(claim.subject, claim.object);
                break;
            case Diag::SE:
                row_ok = store.row_less(claim.object, claim.subject);
                col_ok = store.col_less(claim.object, claim.subject);
                break;
        }
        return row_ok && col_ok;
    };
    if (has(first) && has(second)) {
        v.pass = true;
        return v;
    }
    v.feedback = "the stated relations do not establish that " +
                 render_relation(claim.subject, dir8_name(claim.dir), claim.object) +
                 "; only diagonal relations can be confirmed";
    return v;
}

namespace {

class SpatialBinding final : public VerifierBinding {
public:
    SpatialBinding(std::vector<std::string> entities, std::vector<DiagRelation> givens,
                   bool seed_givens)
        : entities_(std::move(entities)),
          givens_(std::move(givens)),
          seed_(seed_givens),
          extractor_(make_spatial_extractor(entities_)) {
        reset();
    }

    std::string id() const override { return "spatial"; }
    const Extractor& extractor() const override { return *extractor_; }

    Verdict check(const ExtractedState& state) override {
        Verdict v;
        if (state.parse_failed) {
            v.pass = false;
            v.feedback = "the block could not be read (" + state.parse_error + ")";
            v.state_span = state.span;
            return v;
        }
        if (state.kind == StateKind::SpatialRelations) {
            const auto& p = std::get<SpatialRelationsPayload>(state.payload);
            v.pass = true;
            for (const auto& rel : p.relations) {
                Verdict one = verify_relation(store_, rel, entities_);
                if (!one.pass) {
                    v = one;
                    break;
                }
            }
        } else if (state.kind == StateKind::SpatialConclusion) {
            v = verify_conclusion(store_, std::get<SpatialConclusionPayload>(state.payload),
                                  entities_);
        } else {
            v.pass = true;
        }
        v.state_span = state.span;
        return v;
    }

    void reset() override {
        store_ = RelationStore{};
        if (seed_)
            for (const auto& rel : givens_) store_.assert_relation(rel);
    }

private:
    std::vector<std::string> entities_;
    std::vector<DiagRelation> givens_;
    bool seed_;
    std::unique_ptr<Extractor> extractor_;
    RelationStore store_;
};

}  // namespace

std::unique_ptr<VerifierBinding> make_spatial_binding(std::vector<std::string> entities,
                                                      std::vector<DiagRelation> givens,
                                                      bool seed_givens) {
    return std::make_unique<SpatialBinding>(std::move(entities), std::move(givens), seed_givens);
}

}  // namespace interwhen
