#include "interwhen/taskgen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "interwhen/game24.hpp"
#include "interwhen/maze.hpp"
#include "interwhen/spatial.hpp"

namespace interwhen {

namespace {

using nlohmann::json;

// rng() % n instead of uniform_int_distribution keeps draws identical
// across standard library implementations.
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

template <typename T>
void shuffle_vec(std::mt19937_64& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

std::string fold(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    auto sp = [&](std::size_t i) { return std::isspace(static_cast<unsigned char>(s[i])) != 0; };
    while (b < e && sp(b)) ++b;
    while (e > b && sp(e - 1)) --e;
    return std::string(s.substr(b, e - b));
}

constexpr std::array<const char*, 22> kShopNames = {
    "Brassbound Books",     "Copper Kettle Cafe",    "Dapper Fox Tailors",
    "Eventide Apothecary",  "Foggy Harbor Bait",     "Gingersnap Bakery",
    "Hollyhock Florist",    "Inkwell Stationers",    "Juniper Tea House",
    "Kite & Compass Maps",  "Lantern Light Toys",    "Marigold Grocers",
    "Nutmeg Spice Shop",    "Owl Post Couriers",     "Pepperbox Hardware",
    "Quince Preserve Co",   "Rooftop Telescopes",    "Saltwater Taffy Stand",
    "Thistledown Wool",     "Umbrella Exchange",     "Velvet Curtain Cinema",
    "Wishing Well Tokens",
};

// ---------------------------------------------------------------- maze ----

struct CarvedMaze {
    std::vector<std::string> rows;
    TurnCounts turns;
    int steps = 0;
};

std::optional<CarvedMaze> try_carve(std::mt19937_64& rng) {
    int height = 7 + 2 * static_cast<int>(pick(rng, 3));
    int width = 7 + 2 * static_cast<int>(pick(rng, 3));
    std::vector<std::string> rows(height, std::string(width, '#'));

    auto in_grid = [&](GridPos p) {
        return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
    };
    std::vector<std::vector<bool>> visited(height, std::vector<bool>(width, false));
    auto seen = [&](GridPos p) { return in_grid(p) && visited[p.row][p.col]; };

    GridPos cur{1 + static_cast<int>(pick(rng, height - 2)),
                1 + static_cast<int>(pick(rng, width - 2))};
    visited[cur.row][cur.col] = true;
    std::vector<GridPos> path = {cur};
    std::vector<Direction> dirs;

    int target = 6 + static_cast<int>(pick(rng, 9));
    std::optional<Direction> last;
    const std::array<Direction, 4> all = {Direction::Up, Direction::Down, Direction::Left,
                                          Direction::Right};
    while (static_cast<int>(dirs.size()) < target) {
        std::vector<Direction> order(all.begin(), all.end());
        shuffle_vec(rng, order);
        // Bias toward continuing straight so corridors have real runs.
        if (last && pick(rng, 2) == 0) {
            order.erase(std::find(order.begin(), order.end(), *last));
            order.insert(order.begin(), *last);
        }
        bool stepped = false;
        for (Direction d : order) {
            GridPos nxt = moved(cur, d);
            if (!in_grid(nxt) || seen(nxt)) continue;
            // The corridor must stay a simple path: the new cell may touch
            // no visited cell other than the one we come from.
            bool touches = false;
            for (Direction nd : all) {
                GridPos nb = moved(nxt, nd);
                if (nb == cur) continue;
                if (seen(nb)) touches = true;
            }
            if (touches) continue;
            visited[nxt.row][nxt.col] = true;
            path.push_back(nxt);
            dirs.push_back(d);
            cur = nxt;
            last = d;
            stepped = true;
            break;
        }
        if (!stepped) break;  // boxed in; caller retries
    }

    if (dirs.size() < 4) return std::nullopt;
    TurnCounts turns = count_turns(dirs);
    if (turns.right + turns.left == 0) return std::nullopt;
    for (const GridPos& p : path) rows[p.row][p.col] = '*';
    rows[path.front().row][path.front().col] = 'S';
    rows[path.back().row][path.back().col] = 'E';
    CarvedMaze out;
    out.rows = std::move(rows);
    out.turns = turns;
    out.steps = static_cast<int>(dirs.size());
    return out;
}

struct McqOption {
    char letter;
    std::string text;
};

std::string turn_option_text(const TurnCounts& t) {
    return "Right=" + std::to_string(t.right) + ", Left=" + std::to_string(t.left);
}

// Gold plus three nearby-but-wrong counts, shuffled onto letters A-D.
std::pair<std::vector<McqOption>, char> turn_options(std::mt19937_64& rng,
                                                     const TurnCounts& gold) {
    std::vector<TurnCounts> cands = {
        {gold.left, gold.right},          {gold.right + 1, gold.left},
        {gold.right, gold.left + 1},      {std::max(gold.right - 1, 0), gold.left},
        {gold.right, std::max(gold.left - 1, 0)}, {gold.right + 1, gold.left + 1},
        {gold.right + 2, gold.left},
    };
    std::vector<TurnCounts> opts = {gold};
    for (const TurnCounts& c : cands) {
        if (opts.size() == 4) break;
        if (std::find(opts.begin(), opts.end(), c) == opts.end()) opts.push_back(c);
    }
    shuffle_vec(rng, opts);
    std::vector<McqOption> out;
    char gold_letter = 'A';
    for (std::size_t i = 0; i < opts.size(); ++i) {
        char letter = static_cast<char>('A' + i);
        out.push_back({letter, turn_option_text(opts[i])});
        if (opts[i] == gold) gold_letter = letter;
    }
    return {out, gold_letter};
}

std::string maze_prompt(const std::vector<std::string>& rows,
                        const std::vector<McqOption>& options) {
    std::ostringstream os;
    os << "You are given a maze as a character grid. '#' is a wall, '*' is open corridor,\n"
          "'S' is the start and 'E' is the exit. Rows are numbered from 0 at the top and\n"
          "columns from 0 at the left, so moving UP decreases the row index and moving\n"
          "DOWN increases it.\n\n";
    for (const std::string& r : rows) os << r << "\n";
    os << "\nWalk the corridor from S to E (it never branches) and count how many RIGHT\n"
          "turns and how many LEFT turns you make along the way, from your own point of\n"
          "view while walking. Reversals and straight moves are not turns. Then pick the\n"
          "correct option.\n\nOptions:\n";
    for (const McqOption& o : options) os << o.letter << ") " << o.text << "\n";
    os << "\nWhile you reason, follow this protocol exactly:\n"
          "1. First print the line \">>> LOCATE START AND EXIT\" followed by two lines\n"
          "   \"S position: (row,col)\" and \"E position: (row,col)\".\n"
          "2. For every move print a header\n"
          "   \">>> STEP n: Move DIRECTION from (r1,c1) to (r2,c2)\"\n"
          "   (DIRECTION is UP, DOWN, LEFT or RIGHT), then the lines\n"
          "   \"Current position: (r2,c2)\"\n"
          "   \"Previous direction: DIR\"\n"
          "   \"Current direction: DIR\"\n"
          "   \"Turn type: RIGHT, LEFT, STRAIGHT or REVERSAL\"\n"
          "   \"Running count: Right=a, Left=b\"\n"
          "   On the very first move write \"Previous direction: none\" and\n"
          "   \"Turn type: STRAIGHT\".\n"
          "3. Finish with \"the answer is X\" where X is the letter of your option.\n";
    return os.str();
}

// ------------------------------------------------------------- spatial ----

Diag true_diag(GridPos s, GridPos o) {
    if (s.row < o.row) return s.col < o.col ? Diag::NW : Diag::NE;
    return s.col < o.col ? Diag::SW : Diag::SE;
}

struct SpatialDraw {
    std::vector<std::string> entities;
    std::vector<DiagRelation> givens;
    std::string subject, object;
    Diag gold;
};

std::optional<SpatialDraw> try_spatial(std::mt19937_64& rng) {
    std::size_t n = 4 + pick(rng, 3);
    std::vector<std::string> names(kShopNames.begin(), kShopNames.end());
    shuffle_vec(rng, names);
    names.resize(n);

    // Distinct rows and columns make every pair strictly diagonal.
    std::vector<int> rows_perm(n), cols_perm(n);
    for (std::size_t i = 0; i < n; ++i) rows_perm[i] = cols_perm[i] = static_cast<int>(i);
    shuffle_vec(rng, rows_perm);
    shuffle_vec(rng, cols_perm);
    std::vector<GridPos> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = {rows_perm[i], cols_perm[i]};

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j});
    shuffle_vec(rng, pairs);

    // Union-find spanning connectivity plus a couple of extra clues.
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<DiagRelation> givens;
    std::size_t components = n;
    std::size_t extras = pick(rng, 3);
    for (const auto& [i, j] : pairs) {
        bool joins = find(i) != find(j);
        if (!joins && extras == 0) continue;
        if (!joins) --extras;
        parent[find(i)] = find(j);
        if (joins) --components;
        std::size_t s = i, o = j;
        if (pick(rng, 2) == 1) std::swap(s, o);
        givens.push_back({names[s], true_diag(pos[s], pos[o]), names[o]});
        if (components == 1 && extras == 0) break;
    }
    if (components != 1) return std::nullopt;

    RelationStore store;
    for (const DiagRelation& g : givens)
        if (!store.assert_relation(g)) return std::nullopt;

    // The question must be decided by the clues, not merely true in the
    // hidden layout, and must not itself be one of the clues.
    shuffle_vec(rng, pairs);
    for (const auto& [i, j] : pairs) {
        for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
            auto stated = [&](const std::string& s, const std::string& o) {
                for (const DiagRelation& g : givens)
                    if (g.subject == s && g.object == o) return true;
                return false;
            };
            if (stated(names[a], names[b]) || stated(names[b], names[a])) continue;
            auto ent = entailed_diag(store, names[a], names[b]);
            if (!ent) continue;
            SpatialDraw out;
            out.entities = names;
            out.givens = givens;
            out.subject = names[a];
            out.object = names[b];
            out.gold = *ent;
            return out;
        }
    }
    return std::nullopt;
}

std::string spatial_prompt(const SpatialDraw& d, const std::vector<McqOption>& options) {
    std::ostringstream os;
    os << "Several shops sit at distinct spots in a town, no two sharing a street (row)\n"
          "or an avenue (column). You are told some of their relative positions:\n\n";
    for (const DiagRelation& g : d.givens)
        os << "- " << g.subject << " is to the " << diag_name(g.dir) << " of " << g.object
           << "\n";
    os << "\nQuestion: where is " << d.subject << " relative to " << d.object
       << "?\n\nOptions:\n";
    for (const McqOption& o : options) os << o.letter << ") " << o.text << "\n";
    os << "\nWhile you reason, follow this protocol exactly:\n"
          "1. Start with the line \">>> STEP 1: PARSE RELATIONSHIPS\" and restate every\n"
          "   clue as a bullet line \"- X is to the Northwest of Y\" (with the clue's own\n"
          "   direction).\n"
          "2. Then write the line \">>> STEP 2: DERIVE RELATIONSHIPS\". Below it, whenever\n"
          "   you infer a relation between two shops, state it on its own line as a full\n"
          "   sentence, for example \"Brassbound Books is Southeast of Marigold Grocers.\"\n"
          "3. Finish with \"the answer is X\" where X is the letter of your option.\n";
    return os.str();
}

// -------------------------------------------------------------- game24 ----

std::string game24_prompt(const std::array<long long, 4>& nums) {
    std::ostringstream os;
    os << "Using the numbers " << nums[0] << ", " << nums[1] << ", " << nums[2] << " and "
       << nums[3]
       << " exactly once each, combine them with +, -, *, / and parentheses into an\n"
          "expression whose value is exactly 24.\n\n"
          "While you reason, write every complete candidate you try on its own line as\n"
          "an equation ending in the target, for example \"(1+2)*(3+4) = 21\". Check each\n"
          "one before moving on. When you have a correct expression, finish with\n"
          "\"the answer is <expression>\".\n";
    return os.str();
}

json options_to_json(const std::vector<McqOption>& options) {
    json j = json::object();
    for (const McqOption& o : options) j[std::string(1, o.letter)] = o.text;
    return j;
}

std::vector<std::string> option_texts_from_json(const json& options) {
    std::vector<std::string> out;
    for (const auto& [k, v] : options.items()) out.push_back(v.get<std::string>());
    return out;
}

}  // namespace

TaskInstance generate_maze_task(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    for (int attempt = 0; attempt < 500; ++attempt) {
        auto carved = try_carve(rng);
        if (!carved) continue;
        MazeGrid grid{carved->rows};
        auto oracle = walk_path(grid);
        if (!oracle || count_turns(oracle->dirs) != carved->turns) continue;

        auto [options, gold_letter] = turn_options(rng, carved->turns);
        TaskInstance t;
        t.kind = "maze";
        t.id = "maze-" + std::to_string(seed);
        t.prompt = maze_prompt(carved->rows, options);
        t.gold = std::string(1, gold_letter);
        t.data["seed"] = seed;
        t.data["grid"] = carved->rows;
        t.data["options"] = options_to_json(options);
        t.data["turns"] = {{"right", carved->turns.right}, {"left", carved->turns.left}};
        t.data["steps"] = carved->steps;
        return t;
    }
    throw std::logic_error("maze generation failed to converge");
}

TaskInstance generate_spatial_task(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 2);
    for (int attempt = 0; attempt < 500; ++attempt) {
        auto draw = try_spatial(rng);
        if (!draw) continue;

        std::vector<Diag> diags = {Diag::NW, Diag::NE, Diag::SW, Diag::SE};
        shuffle_vec(rng, diags);
        std::vector<McqOption> options;
        char gold_letter = 'A';
        for (std::size_t i = 0; i < diags.size(); ++i) {
            char letter = static_cast<char>('A' + i);
            options.push_back({letter, std::string(diag_name(diags[i]))});
            if (diags[i] == draw->gold) gold_letter = letter;
        }

        TaskInstance t;
        t.kind = "spatial";
        t.id = "spatial-" + std::to_string(seed);
        t.prompt = spatial_prompt(*draw, options);
        t.gold = std::string(1, gold_letter);
        t.data["seed"] = seed;
        t.data["entities"] = draw->entities;
        json givens = json::array();
        for (const DiagRelation& g : draw->givens)
            givens.push_back({{"subject", g.subject},
                              {"dir", std::string(diag_name(g.dir))},
                              {"object", g.object}});
        t.data["givens"] = givens;
        t.data["question"] = {{"subject", draw->subject}, {"object", draw->object}};
        t.data["options"] = options_to_json(options);
        return t;
    }
    throw std::logic_error("spatial generation failed to converge");
}

TaskInstance generate_game24_task(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 3);
    for (int attempt = 0; attempt < 2000; ++attempt) {
        std::array<long long, 4> nums;
        for (long long& v : nums) v = 1 + static_cast<long long>(pick(rng, 13));
        auto witness = solve24(nums);
        if (!witness) continue;
        TaskInstance t;
        t.kind = "game24";
        t.id = "game24-" + std::to_string(seed);
        t.prompt = game24_prompt(nums);
        t.gold = *witness;
        t.data["seed"] = seed;
        t.data["numbers"] = nums;
        return t;
    }
    throw std::logic_error("game24 generation failed to converge");
}

TaskInstance generate_task(const std::string& kind, std::uint64_t seed) {
    if (kind == "maze") return generate_maze_task(seed);
    if (kind == "spatial") return generate_spatial_task(seed);
    if (kind == "game24") return generate_game24_task(seed);
    throw std::invalid_argument("unknown task kind: " + kind);
}

json task_to_json(const TaskInstance& t) {
    return {{"kind", t.kind}, {"id", t.id}, {"prompt", t.prompt}, {"gold", t.gold},
            {"data", t.data}};
}

TaskInstance task_from_json(const json& j) {
    TaskInstance t;
    t.kind = j.at("kind").get<std::string>();
    t.id = j.at("id").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    t.gold = j.at("gold").get<std::string>();
    t.data = j.value("data", json::object());
    return t;
}

std::vector<std::unique_ptr<VerifierBinding>> make_task_bindings(const TaskInstance& t) {
    std::vector<std::unique_ptr<VerifierBinding>> out;
    if (t.kind == "maze") {
        MazeGrid grid{t.data.at("grid").get<std::vector<std::string>>()};
        out.push_back(make_maze_binding(std::move(grid)));
    } else if (t.kind == "spatial") {
        auto entities = t.data.at("entities").get<std::vector<std::string>>();
        std::vector<DiagRelation> givens;
        for (const auto& g : t.data.at("givens")) {
            DiagRelation rel;
            rel.subject = g.at("subject").get<std::string>();
            rel.object = g.at("object").get<std::string>();
            auto d = parse_diag(g.at("dir").get<std::string>());
            if (!d) throw std::invalid_argument("bad direction in task data");
            rel.dir = *d;
            givens.push_back(std::move(rel));
        }
        out.push_back(make_spatial_binding(std::move(entities), std::move(givens)));
    } else if (t.kind == "game24") {
        out.push_back(make_game24_binding(t.data.at("numbers").get<std::vector<long long>>()));
    } else {
        throw std::invalid_argument("unknown task kind: " + t.kind);
    }
    return out;
}

std::unique_ptr<Extractor> make_task_answer_extractor(const TaskInstance& t) {
    AnswerExtractorOptions opts;
    if (t.data.contains("options")) {
        std::string letters;
        for (const auto& [k, v] : t.data.at("options").items()) letters += k;
        opts.letters = letters;
        opts.option_texts = option_texts_from_json(t.data.at("options"));
    } else {
        opts.letters.clear();
    }
    return make_answer_extractor(std::move(opts));
}

bool answer_matches_gold(const TaskInstance& t, const std::string& answer) {
    std::string a = trim_copy(answer);
    if (a.empty()) return false;
    if (t.kind == "game24") {
        auto nums = t.data.at("numbers").get<std::vector<long long>>();
        return verify_game24(nums, a).pass;
    }
    std::string want = fold(trim_copy(t.gold));
    std::string got = fold(a);
    if (got == want) return true;
    if (t.data.contains("options")) {
        const json& options = t.data.at("options");
        if (options.contains(t.gold))
            return got == fold(options.at(t.gold).get<std::string>());
    }
    return false;
}

}  // namespace interwhen
