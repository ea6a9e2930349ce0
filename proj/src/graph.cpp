#include "kgv/graph.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace kgv::graph {

bool operator==(const Config& a, const Config& b) {
    return a.similarity_threshold == b.similarity_threshold && a.max_hops == b.max_hops &&
           a.keyword_edges_enabled == b.keyword_edges_enabled;
}

const char* to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::Adjacent: return "adjacent";
        case EdgeKind::Keyword: return "keyword";
        case EdgeKind::Semantic: return "semantic";
    }
    return "unknown";
}

EdgeKind edge_kind_from_string(std::string_view s) {
    if (s == "adjacent") return EdgeKind::Adjacent;
    if (s == "keyword") return EdgeKind::Keyword;
    if (s == "semantic") return EdgeKind::Semantic;
    throw Error(ErrorCode::IoError, "unknown edge kind '" + std::string(s) + "'");
}

AliasTable AliasTable::builtin() {
    AliasTable t;
    t.add_cluster("apt1", {"comment crew", "comment panda"});
    t.add_cluster("apt28", {"fancy bear", "sofacy", "sednit", "strontium", "pawn storm",
                            "forest blizzard"});
    t.add_cluster("apt29", {"cozy bear", "the dukes", "nobelium", "midnight blizzard"});
    t.add_cluster("apt33", {"elfin", "refined kitten", "peach sandstorm"});
    t.add_cluster("apt34", {"oilrig", "helix kitten", "cobalt gypsy"});
    t.add_cluster("apt35", {"charming kitten", "phosphorus", "newscaster", "mint sandstorm"});
    t.add_cluster("apt37", {"reaper", "scarcruft", "group123"});
    t.add_cluster("apt38", {"bluenoroff", "stardust chollima"});
    t.add_cluster("apt40", {"leviathan", "kryptonite panda", "gadolinium"});
    t.add_cluster("apt41", {"winnti", "barium", "double dragon", "wicked panda"});
    t.add_cluster("carbanak", {"anunak"});
    t.add_cluster("darkhydrus", {"lazy meerkat"});
    t.add_cluster("equation group", {"equation"});
    t.add_cluster("fin7", {"carbon spider", "sangria tempest"});
    t.add_cluster("gamaredon", {"primitive bear", "armageddon", "aqua blizzard"});
    t.add_cluster("kimsuky", {"velvet chollima", "thallium", "emerald sleet"});
    t.add_cluster("lazarus group", {"lazarus", "hidden cobra", "zinc", "diamond sleet"});
    t.add_cluster("muddywater", {"mercury", "static kitten", "mango sandstorm"});
    t.add_cluster("sandworm", {"voodoo bear", "telebots", "iron viking", "seashell blizzard"});
    t.add_cluster("ta505", {"hive0065"});
    t.add_cluster("turla", {"snake", "venomous bear", "uroburos", "waterbug"});
    return t;
}

AliasTable AliasTable::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read alias table " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    AliasTable t = builtin();
    for (auto it = j.begin(); it != j.end(); ++it) {
        t.add_cluster(it.key(), it.value().get<std::vector<std::string>>());
    }
    return t;
}

void AliasTable::add_cluster(const std::string& canonical, const std::vector<std::string>& aliases) {
    const std::string canon = util::lower(util::trim(canonical));
    auto& cluster = clusters_[canon];
    canonical_[canon] = canon;
    for (const auto& alias : aliases) {
        const std::string a = util::lower(util::trim(alias));
        if (a.empty() || a == canon) continue;
        canonical_[a] = canon;
        if (std::find(cluster.begin(), cluster.end(), a) == cluster.end()) {
            cluster.push_back(a);
        }
    }
}

namespace {

std::string strip_decorations(std::string name) {
    // "APT28 (Fancy Bear)" -> "APT28"
    if (auto pos = name.find('('); pos != std::string::npos) {
        name = name.substr(0, pos);
    }
    std::string trimmed = util::trim(name);
    while (!trimmed.empty() && !util::is_word_char(trimmed.back())) trimmed.pop_back();
    return trimmed;
}

} // namespace

std::string AliasTable::normalize(std::string_view name) const {
    std::string key = util::lower(util::trim(name));
    auto it = canonical_.find(key);
    if (it != canonical_.end()) return it->second;
    key = util::lower(strip_decorations(std::string(name)));
    it = canonical_.find(key);
    if (it != canonical_.end()) return it->second;
    return key.empty() ? util::lower(util::trim(name)) : key;
}

std::vector<std::string> AliasTable::expand(std::string_view name) const {
    const std::string canon = normalize(name);
    std::vector<std::string> out{canon};
    auto it = clusters_.find(canon);
    if (it != clusters_.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

const Node* ParagraphKG::find(std::string_view paragraph_id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), paragraph_id,
                               [](const Node& n, std::string_view id) { return n.paragraph_id < id; });
    if (it != nodes.end() && it->paragraph_id == paragraph_id) return &*it;
    return nullptr;
}

std::vector<std::string> ParagraphKG::neighbors(std::string_view paragraph_id) const {
    std::set<std::string> out;
    for (const auto& e : edges) {
        if (e.src == paragraph_id) out.insert(e.dst);
        else if (e.dst == paragraph_id) out.insert(e.src);
    }
    return {out.begin(), out.end()};
}

std::size_t ParagraphKG::connected_pair_count() const {
    std::set<std::pair<std::string_view, std::string_view>> pairs;
    for (const auto& e : edges) pairs.insert({e.src, e.dst});
    return pairs.size();
}

std::string SubKG::content_hash() const {
    std::string joined;
    for (const auto& id : node_ids) {
        joined += id;
        joined += '\n';
    }
    return util::hex64(util::fnv1a64(joined));
}

std::string keyword_prompt(const std::string& paragraph_text) {
    return "Extract the most important keywords (attack organizations, malware names, "
           "techniques, targets) from the following threat-report paragraph. Respond with a "
           "JSON array of lowercase strings and nothing else.\n\nParagraph:\n" +
           paragraph_text;
}

std::vector<std::string> extract_keywords(const corpus::Paragraph& paragraph, llm::Provider* llm,
                                          std::size_t top_k) {
    if (util::trim(paragraph.text).empty()) {
        throw Error(ErrorCode::EmptyParagraph, "cannot extract keywords from empty paragraph");
    }
    if (llm != nullptr) {
        try {
            const std::string response = llm->complete(keyword_prompt(paragraph.text), 256);
            nlohmann::json j = nlohmann::json::parse(response);
            if (!j.is_array()) throw Error(ErrorCode::MalformedLlmOutput, "keywords not an array");
            std::set<std::string> keywords;
            for (const auto& item : j) {
                std::string k = util::lower(util::trim(item.get<std::string>()));
                if (!k.empty()) keywords.insert(std::move(k));
            }
            return {keywords.begin(), keywords.end()};
        } catch (const Error& e) {
            util::log_warn(std::string("keyword extraction fell back to term frequency: ") +
                           e.what());
        } catch (const nlohmann::json::exception& e) {
            util::log_warn(std::string("keyword extraction fell back to term frequency: ") +
                           e.what());
        }
    }
    // Term-frequency fallback over the preprocessed tokens.
    std::map<std::string, int> freq;
    for (const auto& token : paragraph.tokens) ++freq[token];
    std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > top_k) ranked.resize(top_k);
    std::set<std::string> keywords;
    for (const auto& [token, count] : ranked) keywords.insert(token);
    return {keywords.begin(), keywords.end()};
}

namespace {

// Paragraphs whose every token is a stop word still need an embedding; fall
// back to the raw lowercase words, then to the whole text as one token.
std::vector<std::string> embedding_tokens(const corpus::Paragraph& p) {
    if (!p.tokens.empty()) return p.tokens;
    std::vector<std::string> raw;
    std::string current;
    for (char c : p.text) {
        if (util::is_word_char(c)) {
            current.push_back(util::to_lower(c));
        } else if (!current.empty()) {
            raw.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) raw.push_back(current);
    if (raw.empty()) raw.push_back(util::lower(p.text));
    return raw;
}

void add_edge(std::vector<Edge>& edges, std::string a, std::string b, EdgeKind kind, double weight) {
    if (a == b) return;
    if (b < a) std::swap(a, b);
    edges.push_back(Edge{std::move(a), std::move(b), kind, weight});
}

void sort_and_dedupe(std::vector<Edge>& edges) {
    auto key = [](const Edge& e) { return std::tie(e.src, e.dst, e.kind); };
    std::sort(edges.begin(), edges.end(),
              [&](const Edge& a, const Edge& b) { return key(a) < key(b); });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [&](const Edge& a, const Edge& b) { return key(a) == key(b); }),
                edges.end());
}

} // namespace

ParagraphKG build_graph(const std::vector<corpus::Report>& clue_reports,
                        embed::Provider& provider, const Config& config, llm::Provider* llm,
                        int parallelism) {
    std::size_t total = 0;
    for (const auto& report : clue_reports) {
        if (report.role != corpus::Role::Clue) {
            throw Error(ErrorCode::Precondition,
                        "report '" + report.id + "' is not a clue report; pending reports are "
                        "never inserted into the graph");
        }
        total += report.paragraphs.size();
    }
    if (total == 0) {
        throw Error(ErrorCode::EmptyCorpus, "no paragraphs in the clue corpus");
    }

    ParagraphKG kg;
    kg.config = config;
    kg.nodes.reserve(total);

    for (const auto& report : clue_reports) {
        for (const auto& paragraph : report.paragraphs) {
            Node node;
            node.paragraph_id = paragraph.id;
            node.report_id = report.id;
            node.ordinal = paragraph.ordinal;
            node.text = paragraph.text;
            node.embedding = embed::embed_paragraph(embedding_tokens(paragraph), provider);
            node.keywords = extract_keywords(paragraph, llm);
            kg.nodes.push_back(std::move(node));
        }
        for (std::size_t i = 0; i + 1 < report.paragraphs.size(); ++i) {
            add_edge(kg.edges, report.paragraphs[i].id, report.paragraphs[i + 1].id,
                     EdgeKind::Adjacent, 1.0);
        }
    }

    std::sort(kg.nodes.begin(), kg.nodes.end(),
              [](const Node& a, const Node& b) { return a.paragraph_id < b.paragraph_id; });

    if (config.keyword_edges_enabled) {
        std::map<std::string, std::vector<std::size_t>> by_keyword;
        for (std::size_t i = 0; i < kg.nodes.size(); ++i) {
            for (const auto& k : kg.nodes[i].keywords) by_keyword[k].push_back(i);
        }
        std::set<std::pair<std::size_t, std::size_t>> pairs;
        for (const auto& [keyword, indices] : by_keyword) {
            for (std::size_t a = 0; a < indices.size(); ++a) {
                for (std::size_t b = a + 1; b < indices.size(); ++b) {
                    pairs.insert({indices[a], indices[b]});
                }
            }
        }
        for (const auto& [a, b] : pairs) {
            add_edge(kg.edges, kg.nodes[a].paragraph_id, kg.nodes[b].paragraph_id,
                     EdgeKind::Keyword, 1.0);
        }
    }

    // All-pairs similarity, cross-report pairs included. Row results live in
    // per-row slots so the thread schedule cannot change the outcome.
    const std::size_t n = kg.nodes.size();
    std::vector<std::vector<Edge>> row_edges(n);
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = parallelism > 0 ? static_cast<std::size_t>(parallelism)
                                          : std::max(1u, hw);
    workers = std::min<std::size_t>(workers, n == 0 ? 1 : n);

    auto scan_row = [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sim = embed::cosine(kg.nodes[i].embedding, kg.nodes[j].embedding);
            if (sim > config.similarity_threshold) {
                add_edge(row_edges[i], kg.nodes[i].paragraph_id, kg.nodes[j].paragraph_id,
                         EdgeKind::Semantic, sim);
            }
        }
    };

    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) scan_row(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    scan_row(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& row : row_edges) {
        kg.edges.insert(kg.edges.end(), row.begin(), row.end());
    }

    sort_and_dedupe(kg.edges);
    return kg;
}

double density(const ParagraphKG& kg) {
    const std::size_t v = kg.nodes.size();
    if (v < 2) {
        throw Error(ErrorCode::DegenerateGraph,
                    "density needs at least 2 nodes, got " + std::to_string(v));
    }
    const double pairs = static_cast<double>(kg.connected_pair_count());
    return 2.0 * pairs / (static_cast<double>(v) * static_cast<double>(v - 1));
}

SubKG retrieve_subgraph(const ParagraphKG& kg, const std::vector<std::string>& entities,
                        const Config& config, const AliasTable& aliases) {
    if (entities.empty()) {
        throw Error(ErrorCode::Precondition, "entity list must be non-empty");
    }

    std::vector<std::string> probes;
    for (const auto& entity : entities) {
        for (auto& probe : aliases.expand(entity)) probes.push_back(std::move(probe));
    }

    auto node_matches = [&](const Node& node) {
        for (const auto& probe : probes) {
            if (!node.text.empty() && util::contains_word_ci(node.text, probe)) return true;
            for (const auto& keyword : node.keywords) {
                if (keyword == probe || util::contains_word_ci(keyword, probe)) return true;
            }
        }
        return false;
    };

    std::set<std::string> seeds;
    for (const auto& node : kg.nodes) {
        if (node_matches(node)) seeds.insert(node.paragraph_id);
    }
    if (seeds.empty()) {
        throw Error(ErrorCode::NoSeedNodes,
                    "no graph node mentions any of the query entities");
    }

    std::map<std::string, std::vector<std::string>> adjacency;
    for (const auto& e : kg.edges) {
        adjacency[e.src].push_back(e.dst);
        adjacency[e.dst].push_back(e.src);
    }

    std::set<std::string> visited(seeds.begin(), seeds.end());
    std::vector<std::string> frontier(seeds.begin(), seeds.end());
    for (int hop = 0; hop < config.max_hops && !frontier.empty(); ++hop) {
        std::vector<std::string> next;
        for (const auto& id : frontier) {
            auto it = adjacency.find(id);
            if (it == adjacency.end()) continue;
            for (const auto& neighbor : it->second) {
                if (visited.insert(neighbor).second) next.push_back(neighbor);
            }
        }
        frontier = std::move(next);
    }

    SubKG sub;
    sub.node_ids.assign(visited.begin(), visited.end());
    sub.seed_ids.assign(seeds.begin(), seeds.end());
    for (const auto& e : kg.edges) {
        if (visited.count(e.src) && visited.count(e.dst)) sub.edges.push_back(e);
    }
    return sub;
}

void attach_texts(ParagraphKG& kg, const corpus::Corpus& corpus) {
    for (auto& node : kg.nodes) {
        if (const auto* p = corpus.find_paragraph(node.paragraph_id)) {
            node.text = p->text;
        }
    }
}

nlohmann::json to_json(const ParagraphKG& kg) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : kg.nodes) {
        nodes.push_back({{"id", n.paragraph_id},
                         {"report_id", n.report_id},
                         {"ordinal", n.ordinal},
                         {"keywords", n.keywords},
                         {"embedding", n.embedding}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : kg.edges) {
        edges.push_back({{"src", e.src},
                         {"dst", e.dst},
                         {"kind", to_string(e.kind)},
                         {"weight", e.weight}});
    }
    return {{"config",
             {{"similarity_threshold", kg.config.similarity_threshold},
              {"max_hops", kg.config.max_hops},
              {"keyword_edges_enabled", kg.config.keyword_edges_enabled}}},
            {"nodes", nodes},
            {"edges", edges}};
}

ParagraphKG kg_from_json(const nlohmann::json& j) {
    ParagraphKG kg;
    const auto& cj = j.at("config");
    kg.config.similarity_threshold = cj.at("similarity_threshold").get<double>();
    kg.config.max_hops = cj.at("max_hops").get<int>();
    kg.config.keyword_edges_enabled = cj.at("keyword_edges_enabled").get<bool>();
    for (const auto& nj : j.at("nodes")) {
        Node n;
        n.paragraph_id = nj.at("id").get<std::string>();
        n.report_id = nj.at("report_id").get<std::string>();
        n.ordinal = nj.at("ordinal").get<int>();
        n.keywords = nj.at("keywords").get<std::vector<std::string>>();
        n.embedding = nj.at("embedding").get<embed::Vector>();
        kg.nodes.push_back(std::move(n));
    }
    for (const auto& ej : j.at("edges")) {
        Edge e;
        e.src = ej.at("src").get<std::string>();
        e.dst = ej.at("dst").get<std::string>();
        e.kind = edge_kind_from_string(ej.at("kind").get<std::string>());
        e.weight = ej.at("weight").get<double>();
        kg.edges.push_back(std::move(e));
    }
    return kg;
}

void save_kg(const ParagraphKG& kg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << to_json(kg).dump(2) << "\n";
}

ParagraphKG load_kg(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    return kg_from_json(nlohmann::json::parse(in));
}

} // namespace kgv::graph
