#include "interwhen/mock_backend.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <vector>

#include "interwhen/trace.hpp"

namespace interwhen {

namespace {

struct ScriptNode {
    std::vector<std::string> tokens;
    std::string text;  // concatenation of tokens
    std::optional<std::string> next;
    std::vector<std::pair<std::string, std::string>> branches;  // key -> node, longest key first
};

struct ProbeEntry {
    std::string suffix;
    std::vector<std::vector<TokenDistribution>> calls;
    std::size_t used = 0;
};

constexpr std::string_view kEndThinkKey = "__end_think__";
constexpr std::string_view kAnyKey = "*";
constexpr std::string_view kEndThinkTag = "</think>";

class MockStream final : public GenerationStream {
public:
    explicit MockStream(std::vector<std::string> events) : events_(std::move(events)) {}

    std::optional<TokenEvent> next() override {
        if (i_ >= events_.size()) return std::nullopt;
        return TokenEvent{events_[i_++], std::nullopt};
    }

private:
    std::vector<std::string> events_;
    std::size_t i_ = 0;
};

class MockBackend final : public Backend {
public:
    MockBackend(nlohmann::json script, std::string id) : id_(std::move(id)) {
        if (script.contains("nodes")) {
            for (auto& [name, body] : script["nodes"].items()) nodes_[name] = load_node(body);
        } else if (script.contains("tokens")) {
            nodes_["root"] = load_node(script);
        }
        start_ = script.value("start", "root");
        if (!nodes_.count(start_))
            throw ContractViolation("mock script has no start node '" + start_ + "'");
        for (const auto& a : script.value("attempts", nlohmann::json::array()))
            attempt_starts_.push_back(a.get<std::string>());
        current_attempt_start_ = attempt_starts_.empty() ? start_ : attempt_starts_.front();
        for (const auto& r : script.value("prompts", nlohmann::json::array()))
            prompt_routes_.emplace_back(r.at("contains").get<std::string>(),
                                        r.at("start").get<std::string>());
        for (const auto& p : script.value("probes", nlohmann::json::array())) {
            ProbeEntry e;
            e.suffix = p.at("suffix").get<std::string>();
            for (const auto& call : p.value("calls", nlohmann::json::array())) {
                std::vector<TokenDistribution> dists;
                for (const auto& dist : call) {
                    TokenDistribution d;
                    for (const auto& cand : dist)
                        d.top.push_back(
                            {cand.at(0).get<std::string>(), cand.at(1).get<double>()});
                    dists.push_back(std::move(d));
                }
                e.calls.push_back(std::move(dists));
            }
            probes_.push_back(std::move(e));
        }
    }

    std::string id() const override { return id_; }

    std::unique_ptr<GenerationStream> generate(const GenerationRequest& req) override {
        Resolved at = resolve(req.prefill, start_node_for(req));
        std::vector<std::string> events;
        int budget = req.params.max_tokens > 0 ? req.params.max_tokens : -1;
        const ScriptNode* node = at.node;
        std::size_t offset = at.offset;
        while (node) {
            std::size_t consumed = 0;
            for (const auto& tok : node->tokens) {
                std::size_t tok_end = consumed + tok.size();
                if (tok_end > offset) {
                    std::size_t from = offset > consumed ? offset - consumed : 0;
                    events.push_back(tok.substr(from));
                    offset = tok_end;
                    if (budget > 0 && static_cast<int>(events.size()) >= budget)
                        return std::make_unique<MockStream>(std::move(events));
                }
                consumed = tok_end;
            }
            node = node->next ? find_node(*node->next) : nullptr;
            offset = 0;
        }
        return std::make_unique<MockStream>(std::move(events));
    }

    std::vector<TokenDistribution> probe(const GenerationRequest& req, int max_tokens) override {
        ProbeEntry* best = nullptr;
        for (auto& e : probes_) {
            if (req.prefill.size() < e.suffix.size()) continue;
            if (req.prefill.compare(req.prefill.size() - e.suffix.size(), e.suffix.size(),
                                    e.suffix) != 0)
                continue;
            if (!best || e.suffix.size() > best->suffix.size()) best = &e;
        }
        if (!best || best->calls.empty()) return {};
        std::size_t idx = std::min(best->used, best->calls.size() - 1);
        ++best->used;
        const auto& call = best->calls[idx];
        std::size_t n = std::min<std::size_t>(call.size(), static_cast<std::size_t>(max_tokens));
        return {call.begin(), call.begin() + n};
    }

private:
    struct Resolved {
        const ScriptNode* node;
        std::size_t offset;  // bytes of node->text already covered by the prefill
    };

    static ScriptNode load_node(const nlohmann::json& body) {
        ScriptNode n;
        for (const auto& t : body.value("tokens", nlohmann::json::array()))
            n.tokens.push_back(t.get<std::string>());
        for (const auto& t : n.tokens) n.text += t;
        if (body.contains("next") && !body["next"].is_null())
            n.next = body["next"].get<std::string>();
        if (body.contains("branches")) {
            for (auto& [key, target] : body["branches"].items())
                n.branches.emplace_back(key, target.get<std::string>());
            std::sort(n.branches.begin(), n.branches.end(), [](const auto& a, const auto& b) {
                return a.first.size() > b.first.size();
            });
        }
        return n;
    }

    const ScriptNode* find_node(const std::string& name) const {
        auto it = nodes_.find(name);
        if (it == nodes_.end())
            throw ContractViolation("mock script references unknown node '" + name + "'");
        return &it->second;
    }

    // One start node per request: prompt routing first, then per-attempt
    // cycling (a fresh empty-prefill run advances the attempt counter;
    // restarts within a run keep the current attempt's root).
    std::string start_node_for(const GenerationRequest& req) {
        for (const auto& [needle, target] : prompt_routes_)
            if (req.prompt.find(needle) != std::string::npos) return target;
        if (attempt_starts_.empty()) return start_;
        if (req.prefill.empty()) {
            std::size_t i = std::min(attempt_counter_++, attempt_starts_.size() - 1);
            current_attempt_start_ = attempt_starts_[i];
        }
        return current_attempt_start_;
    }

    // A wildcard branch cannot know where the injected text ends. If the
    // target node's opening bytes appear later in the prefill, the injection
    // ended there (an earlier restart already streamed past it); otherwise
    // the injection is the prefill's tail.
    static std::size_t resync_pos(const std::string& prefill, std::size_t from,
                                  const ScriptNode* target) {
        if (!target->text.empty()) {
            std::size_t probe_len = std::min<std::size_t>(target->text.size(), 24);
            std::size_t q = prefill.find(target->text.substr(0, probe_len), from);
            if (q != std::string::npos) return q;
        }
        return prefill.size();
    }

    Resolved resolve(const std::string& prefill, const std::string& start) const {
        const ScriptNode* node = find_node(start);
        std::size_t offset = 0;
        std::size_t pos = 0;
        while (true) {
            while (offset < node->text.size() && pos < prefill.size() &&
                   node->text[offset] == prefill[pos]) {
                ++offset;
                ++pos;
            }
            if (pos == prefill.size()) return {node, offset};
            std::string_view injected(prefill.c_str() + pos, prefill.size() - pos);
            // Branch keys take priority: the divergence is an injection.
            const ScriptNode* taken = nullptr;
            for (const auto& [key, target] : node->branches) {
                if (key == kEndThinkKey) {
                    if (injected.starts_with(kEndThinkTag)) {
                        taken = find_node(target);
                        pos = resync_pos(prefill, pos + kEndThinkTag.size(), taken);
                        break;
                    }
                } else if (key == kAnyKey) {
                    taken = find_node(target);
                    pos = resync_pos(prefill, pos, taken);
                    break;
                } else if (injected.starts_with(key)) {
                    pos += key.size();
                    taken = find_node(target);
                    break;
                }
            }
            if (taken) {
                node = taken;
                offset = 0;
                continue;
            }
            if (offset == node->text.size() && node->next) {
                node = find_node(*node->next);
                offset = 0;
                continue;
            }
            throw ContractViolation("mock script does not cover the amended text near byte " +
                                    std::to_string(pos) + " ('" +
                                    std::string(injected.substr(0, 40)) + "')");
        }
    }

    std::string id_;
    std::map<std::string, ScriptNode> nodes_;
    std::string start_;
    std::vector<ProbeEntry> probes_;
    std::vector<std::string> attempt_starts_;
    std::vector<std::pair<std::string, std::string>> prompt_routes_;
    std::size_t attempt_counter_ = 0;
    std::string current_attempt_start_;
};

}  // namespace

std::unique_ptr<Backend> make_mock_backend(nlohmann::json script, std::string id) {
    return std::make_unique<MockBackend>(std::move(script), std::move(id));
}

std::unique_ptr<Backend> load_mock_backend(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BackendError(BackendError::Kind::Config, "cannot open script file " + path);
    nlohmann::json script = nlohmann::json::parse(in);
    return make_mock_backend(std::move(script), "mock:" + path);
}

}  // namespace interwhen
