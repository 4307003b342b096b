#pragma once

// The `geel` command line: one binary, one subcommand per pipeline stage.
// Every flag --key may also be given as "key" in a JSON file passed with
// --config; flags on the command line win, unknown keys are rejected.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geel/checkpoint.hpp"
#include "geel/datasets.hpp"
#include "geel/error.hpp"
#include "geel/metrics.hpp"
#include "geel/sampler.hpp"
#include "geel/sequence_codec.hpp"
#include "geel/training.hpp"

#ifndef GEEL_GIT_DESCRIBE
#define GEEL_GIT_DESCRIBE "unknown"
#endif

namespace geel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A subcommand whose options double as config-file keys.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help) : app_(parent.add_subcommand(name, help)) {
    app_->add_option("--config", config_path_, "JSON file of option values");
    add("seed", seed, "random seed");
    add("out", out, "run directory");
  }
  Command(const Command&) = delete;
  Command& operator=(const Command&) = delete;
  virtual ~Command() = default;

  template <class T>
  CLI::Option* add(const std::string& key, T& var, const std::string& help) {
    keys_.push_back({key, [&var] { return json(var); }});
    return app_->add_option("--" + key, var, help)->capture_default_str();
  }
  CLI::Option* flag(const std::string& key, bool& var, const std::string& help) {
    keys_.push_back({key, [&var] { return json(var); }});
    return app_->add_flag("--" + key, var, help);
  }

  void require(CLI::Option* opt) { required_.push_back(opt); }

  bool selected() const { return app_->parsed(); }
  const std::string& name() const { return app_->get_name(); }

  /// Fills options not given on the command line from the --config file.
  void apply_config() {
    if (config_path_.empty()) return;
    json j;
    try {
      j = json::parse(read_file(config_path_));
    } catch (const json::exception& e) {
      throw ConfigError("config " + config_path_ + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      CLI::Option* opt = key == "config" ? nullptr : app_->get_option_no_throw("--" + key);
      if (!opt) throw ConfigError("unknown config key '" + key + "' for command " + name());
      if (opt->count() > 0) continue;
      auto text = [&](const json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_object() || v.is_array()) throw ConfigError("config key '" + key + "' has a nested value");
        return v.dump();
      };
      try {
        if (value.is_array())
          for (const auto& v : value) opt->add_result(text(v));
        else
          opt->add_result(text(value));
        opt->run_callback();
      } catch (const CLI::Error& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
    }
  }

  void check_required() const {
    for (const CLI::Option* opt : required_)
      if (opt->count() == 0) throw ConfigError(opt->get_name() + " is required (flag or config key)");
  }

  json resolved() const {
    json j = json::object();
    for (const auto& [key, get] : keys_) j[key] = get();
    return j;
  }

  /// Creates the run directory and runs the command, recording metadata.
  void execute() {
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out);
    dir_ = out;
    write_file(dir_ / "config.json", resolved().dump(2) + "\n");
    run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json meta = {{"command", name()},
                 {"git_describe", GEEL_GIT_DESCRIBE},
                 {"started_at", utc_timestamp(started)},
                 {"finished_at", utc_timestamp(std::chrono::system_clock::now())},
                 {"wall_seconds", secs},
                 {"seed", seed}};
    write_file(dir_ / "run.json", meta.dump(2) + "\n");
  }

  std::uint64_t seed = 0;
  std::string out = "run";

 protected:
  virtual void run() = 0;
  const fs::path& dir() const { return dir_; }
  CLI::App* app_;

 private:
  std::string config_path_;
  std::vector<const CLI::Option*> required_;
  std::vector<std::pair<std::string, std::function<json()>>> keys_;
  fs::path dir_;
};

inline CLI::Option* choices(CLI::Option* opt, std::vector<std::string> allowed) {
  return opt->check(CLI::IsMember(std::move(allowed)));
}

inline const std::vector<std::string> kOrderings{"identity", "cm", "bfs", "dfs", "random"};
inline const std::vector<std::string> kStarts{"deterministic", "sampled"};
inline const std::vector<std::string> kModes{"plain", "attributed"};
inline const std::vector<std::string> kRepresentations{"geel", "edge-list", "intra-gap", "flat-adj"};

/// Keeps the largest connected component of every record, carrying types.
inline void keep_largest_components(Dataset& d) {
  for (auto& r : d.records) {
    const Component c = largest_connected_component(to_graph(r));
    if (c.kept.size() == r.node_count) continue;
    std::vector<std::size_t> new_id(r.node_count, SIZE_MAX);
    for (std::size_t i = 0; i < c.kept.size(); ++i) new_id[c.kept[i]] = i;
    GraphRecord k;
    k.name = r.name;
    k.node_count = c.kept.size();
    for (NodeId u : c.kept)
      if (r.attributed()) k.node_types.push_back(r.node_types[u]);
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
      const auto [u, v] = r.edges[e];
      if (new_id[u] == SIZE_MAX || new_id[v] == SIZE_MAX) continue;
      k.edges.emplace_back(new_id[u], new_id[v]);
      if (r.attributed()) k.edge_types.push_back(r.edge_types[e]);
    }
    canonicalize(k);
    r = std::move(k);
  }
}

inline OrderingSpec ordering_spec(const std::string& family, const std::string& start, bool reverse) {
  return {parse_ordering_family(family), parse_start_policy(start), reverse};
}

inline std::vector<Graph> plain_graphs(const Dataset& d) {
  std::vector<Graph> out;
  for (const auto& r : d.records) out.push_back(to_graph(r));
  return out;
}

inline TypeAlphabets alphabets_of(const json& codec) {
  if (codec.value("mode", std::string("plain")) != "attributed") return {};
  return {codec.at("node_types").get<std::vector<std::string>>(), codec.at("edge_types").get<std::vector<std::string>>()};
}

// ---- dataset --------------------------------------------------------------

class DatasetCommand final : public Command {
 public:
  explicit DatasetCommand(CLI::App& app) : Command(app, "dataset", "generate a synthetic graph corpus") {
    choices(add("family", family, "grid | lobster | community | path"), {"grid", "lobster", "community", "path"});
    add("count", spec.count, "number of graphs");
    add("grid_min", spec.grid_min, "smallest grid side");
    add("grid_max", spec.grid_max, "largest grid side");
    add("lobster_backbone", spec.lobster_backbone, "expected lobster backbone length");
    add("lobster_p1", spec.lobster_p1, "first-level leaf continuation probability");
    add("lobster_p2", spec.lobster_p2, "second-level leaf continuation probability");
    add("community_min", spec.community_min, "smallest community block");
    add("community_max", spec.community_max, "largest community block");
    add("community_p", spec.community_p, "intra-block edge probability");
    add("community_inter", spec.community_inter, "cross edges per node");
    add("min_nodes", spec.min_nodes, "node-count lower bound (lobster, path)");
    add("max_nodes", spec.max_nodes, "node-count upper bound (lobster, path)");
    flag("attributed", attributed, "attach uniformly random node and edge types");
    add("node_types", node_types, "node type alphabet");
    add("edge_types", edge_types, "edge type alphabet");
    add("train_frac", train_frac, "also write a seeded train/test split (0 disables)");
  }

  std::string family = "grid";
  CorpusSpec spec;
  bool attributed = false;
  std::vector<std::string> node_types{"C", "N", "O"};
  std::vector<std::string> edge_types{"single", "double"};
  double train_frac = 0.0;

 private:
  void run() override {
    spec.family = parse_graph_family(family);
    if (train_frac < 0.0 || train_frac >= 1.0) throw ConfigError("train_frac must be in [0, 1)");
    Rng rng(seed);
    const auto graphs = generate_corpus(spec, rng);
    Dataset d;
    if (attributed) d.alphabets = TypeAlphabets(node_types, edge_types);
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const std::string name = family + "-" + std::to_string(i);
      d.records.push_back(attributed ? to_record(assign_random_types(graphs[i], d.alphabets, rng), d.alphabets, name)
                                     : to_record(graphs[i], name));
    }
    save_graphs(d, (dir() / "graphs.jsonl").string());
    json summary = {{"graphs", d.records.size()}, {"path", (dir() / "graphs.jsonl").string()}};
    if (train_frac > 0.0) {
      auto [train, test] = split(d.records, train_frac, rng);
      save_graphs({d.alphabets, train}, (dir() / "train.jsonl").string());
      save_graphs({d.alphabets, test}, (dir() / "test.jsonl").string());
      summary["train"] = train.size();
      summary["test"] = test.size();
    }
    std::cout << summary.dump() << "\n";
  }
};

// ---- stats ----------------------------------------------------------------

class StatsCommand final : public Command {
 public:
  explicit StatsCommand(CLI::App& app) : Command(app, "stats", "corpus bandwidth and vocabulary sizes") {
    require(add("input", input, "dataset JSONL"));
    choices(add("ordering", ordering, "identity | cm"), {"identity", "cm"});
    flag("reverse", reverse, "reverse the ordering");
    flag("lcc", lcc, "keep only the largest connected component of each graph");
    add("compare_vocab", compare_vocab, "reference B^2 figure printed next to the computed one (0 disables)");
  }

  std::string input, ordering = "cm";
  bool reverse = false, lcc = false;
  std::size_t compare_vocab = 0;

 private:
  void run() override {
    Dataset d = load_graphs(input);
    if (lcc) keep_largest_components(d);
    const CorpusStats s = corpus_stats(d, ordering_spec(ordering, "deterministic", reverse));
    json j = s.to_json();
    if (compare_vocab > 0) {
      j["reference_vocab"] = compare_vocab;
      j["reference_match"] = s.b_squared() == compare_vocab;
    }
    write_file(dir() / "stats.json", j.dump(2) + "\n");
    std::cout << "graphs: " << s.graph_count << "\n"
              << "nodes: " << s.min_nodes << ".." << s.max_nodes << "\n"
              << "edges: " << s.min_edges << ".." << s.max_edges << "\n"
              << "bandwidth B: " << s.bandwidth << "\n"
              << "vocab B^2: " << s.b_squared();
    if (compare_vocab > 0)
      std::cout << " (reference " << compare_vocab << ", " << (s.b_squared() == compare_vocab ? "match" : "differs")
                << ")";
    std::cout << "\n"
              << "vocab B(B+1)+2: " << s.plain_vocab() << "\n"
              << "vocab attributed: " << s.attributed_vocab() << " (compact 2B+|X|+|E|: "
              << s.attributed_vocab_compact() << ")\n"
              << "rep size: " << s.rep_size() << "\n"
              << "N^2: " << s.n_squared() << "\n"
              << "max plain length: " << s.max_plain_length << "\n"
              << "max attributed length: " << s.max_attributed_length << "\n"
              << "graphs over 2M+N: " << s.over_2m_plus_n << "\n"
              << "exceptions: " << s.exceptions.size() << "\n";
    for (const auto& e : s.exceptions)
      std::cerr << json{{"warning", "skipped graph"}, {"index", e.index}, {"name", e.name}, {"reason", e.reason}}.dump()
                << "\n";
  }
};

// ---- encode / decode ------------------------------------------------------

inline constexpr int kTokenDumpVersion = 1;

class EncodeCommand final : public Command {
 public:
  explicit EncodeCommand(CLI::App& app) : Command(app, "encode", "write token streams for a corpus") {
    require(add("input", input, "dataset JSONL"));
    choices(add("ordering", ordering, "node ordering family"), kOrderings);
    choices(add("start", start, "C-M start node policy"), kStarts);
    flag("reverse", reverse, "reverse the ordering");
    choices(add("mode", mode, "plain | attributed"), kModes);
    choices(add("representation", representation, "token representation (plain mode)"), kRepresentations);
    flag("lcc", lcc, "keep only the largest connected component of each graph");
  }

  std::string input, ordering = "cm", start = "deterministic", mode = "plain", representation = "geel";
  bool reverse = false, lcc = false;

 private:
  void run() override {
    Dataset d = load_graphs(input);
    if (lcc) keep_largest_components(d);
    const SequenceMode m = parse_sequence_mode(mode);
    if (m == SequenceMode::attributed && d.alphabets.empty()) throw ConfigError("attributed mode needs a typed dataset");
    if (m == SequenceMode::attributed && representation != "geel")
      throw ConfigError("attributed mode uses the geel representation");
    const OrderingSpec spec = ordering_spec(ordering, start, reverse);
    Rng rng(seed);
    std::vector<AttributedGraph> graphs;
    std::vector<Ordering> orders;
    std::size_t bound = 1, max_n = 0;
    for (const auto& r : d.records) {
      graphs.push_back(m == SequenceMode::attributed ? to_attributed(r, d.alphabets) : untyped(to_graph(r)));
      detail::require_connected(graphs.back().graph, "encode");
      orders.push_back(make_ordering(graphs.back().graph, spec, &rng));
      bound = std::max(bound, bandwidth(graphs.back().graph, orders.back()));
      max_n = std::max(max_n, r.node_count);
    }
    std::unique_ptr<SequenceCodec> codec;
    if (m == SequenceMode::attributed)
      codec = std::make_unique<AttributedCodec>(AttributedVocabulary(bound, d.alphabets));
    else
      switch (parse_representation(representation)) {
        case Representation::geel: codec = std::make_unique<GeelCodec>(bound); break;
        case Representation::edge_list: codec = std::make_unique<EdgeListCodec>(max_n); break;
        case Representation::intra_gap: codec = std::make_unique<IntraGapCodec>(max_n, bound); break;
        case Representation::flat_adjacency: codec = std::make_unique<FlatAdjacencyCodec>(max_n); break;
      }
    json header = codec->to_json();
    header["format"] = "geel-tokens";
    header["version"] = kTokenDumpVersion;
    std::string text = "# " + header.dump() + "\n";
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      json meta = {{"node_count", d.records[i].node_count}};
      if (!d.records[i].name.empty()) meta["name"] = d.records[i].name;
      text += "# " + meta.dump() + "\n";
      for (TokenId id : codec->encode_ids(graphs[i], orders[i])) text += codec->describe_token(id) + "\n";
    }
    write_file(dir() / "tokens.txt", text);
    std::cout << json{{"graphs", graphs.size()}, {"vocab_size", codec->vocab_size()}, {"gap_bound", bound}}.dump()
              << "\n";
  }
};

struct TokenDump {
  json header;
  std::vector<json> meta;
  std::vector<std::vector<TokenId>> streams;
};

inline TokenDump parse_token_dump_file(const std::string& text, std::unique_ptr<SequenceCodec>& codec) {
  TokenDump dump;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool open = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      json j;
      try {
        j = json::parse(line.substr(1));
      } catch (const json::exception&) {
        continue;  // free-form comment
      }
      if (!codec) {
        if (j.value("format", "") != "geel-tokens") throw ParseError(lineno, "missing geel-tokens header");
        if (j.value("version", 0) > kTokenDumpVersion) throw ParseError(lineno, "token dump version is newer than supported");
        dump.header = j;
        try {
          codec = SequenceCodec::from_json(j);
        } catch (const std::exception& e) {
          throw ParseError(lineno, std::string("bad codec header: ") + e.what());
        }
      } else {
        if (open) throw ParseError(lineno, "graph header inside a token stream");
        dump.meta.push_back(j);
      }
      continue;
    }
    if (!codec) throw ParseError(lineno, "token before the geel-tokens header");
    TokenId id = 0;
    try {
      id = codec->parse_token(line);
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
    if (id == codec->bos()) {
      if (open) throw ParseError(lineno, "BOS inside a stream");
      open = true;
      dump.streams.emplace_back();
      if (dump.meta.size() < dump.streams.size()) dump.meta.emplace_back(json::object());
    } else if (!open) {
      throw ParseError(lineno, "token outside BOS..EOS");
    }
    dump.streams.back().push_back(id);
    if (id == codec->eos()) open = false;
  }
  if (open) throw ParseError(lineno, "stream not closed by EOS");
  if (!codec) throw ParseError(lineno, "empty token dump");
  return dump;
}

class DecodeCommand final : public Command {
 public:
  explicit DecodeCommand(CLI::App& app) : Command(app, "decode", "turn a token dump back into a dataset") {
    require(add("input", input, "token dump written by encode"));
  }

  std::string input;

 private:
  void run() override {
    std::unique_ptr<SequenceCodec> codec;
    const TokenDump dump = parse_token_dump_file(read_file(input), codec);
    Dataset d;
    d.alphabets = alphabets_of(dump.header);
    for (std::size_t i = 0; i < dump.streams.size(); ++i) {
      const AttributedGraph ag = codec->decode(dump.streams[i]);
      GraphRecord r = d.alphabets.empty() ? to_record(ag.graph) : to_record(ag, d.alphabets);
      r.name = dump.meta[i].value("name", "");
      const auto n = dump.meta[i].value("node_count", r.node_count);
      if (n != r.node_count)
        throw DecodeError(DecodeFailure::malformed, 0,
                          "graph " + std::to_string(i) + " decodes to " + std::to_string(r.node_count) +
                              " nodes, header says " + std::to_string(n));
      d.records.push_back(std::move(r));
    }
    save_graphs(d, (dir() / "graphs.jsonl").string());
    std::cout << json{{"graphs", d.records.size()}}.dump() << "\n";
  }
};

// ---- training -------------------------------------------------------------

/// Options shared by train and the ablation commands.
class TrainingCommand : public Command {
 public:
  TrainingCommand(CLI::App& app, const std::string& name, const std::string& help) : Command(app, name, help) {
    require(add("train", train_path, "training dataset JSONL"));
    add("epochs", model.epochs, "training epochs");
    add("batch_size", batch_size, "sequences per optimizer step");
    add("lr", lr, "Adam learning rate");
    add("embed_dim", model.embed_dim, "embedding and hidden width");
    add("num_layers", model.num_layers, "stacked LSTM layers");
    add("dropout", model.input_dropout, "input dropout rate");
    choices(add("ordering", ordering, "node ordering family"), kOrderings);
    choices(add("start", start, "C-M start node policy"), kStarts);
    flag("reverse", reverse, "reverse the ordering");
    choices(add("mode", mode, "plain | attributed"), kModes);
    add("clip_norm", clip_norm, "global gradient-norm clip (0 disables)");
    add("max_seq_len", max_seq_len, "truncate sequences to this many tokens (0 disables)");
    add("node_slack", node_slack, "positional capacity as a multiple of the corpus max N");
    add("bound_samples", bound_samples, "orderings sampled per graph when sizing the vocabulary");
    flag("lcc", lcc, "keep only the largest connected component of each graph");
  }

  std::string train_path, ordering = "cm", start = "sampled", mode = "plain";
  ModelOptions model;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  bool reverse = false, lcc = false;
  double clip_norm = 0.0;
  std::size_t max_seq_len = 0;
  double node_slack = 2.0;
  std::size_t bound_samples = 16;

 protected:
  Dataset load_training_set(const std::string& path) const {
    Dataset d = load_graphs(path);
    if (lcc) keep_largest_components(d);
    if (d.records.empty()) throw ConfigError(path + " has no graphs");
    if (parse_sequence_mode(mode) == SequenceMode::attributed && d.alphabets.empty())
      throw ConfigError("attributed mode needs a typed dataset");
    return d;
  }

  std::vector<AttributedGraph> graphs_for_mode(const Dataset& d) const {
    std::vector<AttributedGraph> out;
    for (const auto& r : d.records)
      out.push_back(parse_sequence_mode(mode) == SequenceMode::attributed ? to_attributed(r, d.alphabets)
                                                                          : untyped(to_graph(r)));
    return out;
  }

  TrainConfig train_config(const OrderingSpec& spec) const {
    TrainConfig c;
    c.batch_size = batch_size;
    c.learning_rate = lr;
    c.ordering = spec;
    c.clip_norm = clip_norm;
    c.max_seq_len = max_seq_len;
    c.seed = seed;
    return c;
  }

  CodecOptions codec_options(const OrderingSpec& spec, Representation repr) const {
    CodecOptions o;
    o.representation = repr;
    o.mode = parse_sequence_mode(mode);
    o.ordering = spec;
    o.bound_samples = bound_samples;
    o.node_slack = node_slack;
    return o;
  }

  static std::string curve_csv(const std::vector<EpochResult>& curve) {
    std::string s = "epoch,loss,wall_seconds\n";
    double wall = 0.0;
    for (std::size_t e = 0; e < curve.size(); ++e) {
      wall += curve[e].seconds;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%zu,%.10g,%.6f\n", e + 1, curve[e].loss, wall);
      s += buf;
    }
    return s;
  }

  static void log_epoch(const std::string& tag, const TrainOutcome& o) {
    const auto& r = o.curve.back();
    std::cerr << json{{"tag", tag}, {"epoch", o.curve.size()}, {"loss", r.loss}, {"seconds", r.seconds},
                      {"skipped", r.skipped}}
                     .dump()
              << "\n";
  }

  Checkpoint make_checkpoint(const TrainOutcome& o) const {
    Checkpoint ck;
    ck.config = o.run.model_config;
    ck.params = o.run.params;
    ck.codec = o.fit.codec->to_json();
    ck.extra = {{"epoch", o.curve.size()}, {"seed", seed}, {"train", train_path}, {"ordering", ordering},
                {"git_describe", GEEL_GIT_DESCRIBE}};
    return ck;
  }
};

class TrainCommand final : public TrainingCommand {
 public:
  explicit TrainCommand(CLI::App& app) : TrainingCommand(app, "train", "train the sequence model") {
    choices(add("representation", representation, "token representation"), kRepresentations);
    add("checkpoint_every", checkpoint_every, "also checkpoint every k epochs (0: final only)");
  }

  std::string representation = "geel";
  std::size_t checkpoint_every = 0;

 private:
  void run() override {
    const Dataset d = load_training_set(train_path);
    const auto graphs = graphs_for_mode(d);
    const OrderingSpec spec = ordering_spec(ordering, start, reverse);
    std::string log = "epoch,loss,wall_seconds\n";
    double wall = 0.0;
    const auto outcome = train_model(graphs, d.alphabets, codec_options(spec, parse_representation(representation)),
                                     train_config(spec), model, [&](const TrainOutcome& o) {
                                       log_epoch("train", o);
                                       wall += o.curve.back().seconds;
                                       char buf[96];
                                       std::snprintf(buf, sizeof buf, "%zu,%.10g,%.6f\n", o.curve.size(),
                                                     o.curve.back().loss, wall);
                                       log += buf;
                                       write_file(dir() / "train_log.csv", log);
                                       if (checkpoint_every > 0 && o.curve.size() % checkpoint_every == 0) {
                                         char name[64];
                                         std::snprintf(name, sizeof name, "checkpoint_epoch_%04zu.geel", o.curve.size());
                                         save_checkpoint(make_checkpoint(o), (dir() / name).string());
                                       }
                                     });
    write_file(dir() / "train_log.csv", log);
    save_checkpoint(make_checkpoint(outcome), (dir() / "model.geel").string());
    std::cout << json{{"epochs", outcome.curve.size()},
                      {"final_loss", outcome.curve.empty() ? 0.0 : outcome.curve.back().loss},
                      {"vocab_size", outcome.fit.codec->vocab_size()},
                      {"checkpoint", (dir() / "model.geel").string()}}
                     .dump()
              << "\n";
  }
};

// ---- sample / eval / timing -----------------------------------------------

inline std::size_t auto_max_tokens(std::size_t max_nodes) { return max_nodes * max_nodes + 2 * max_nodes + 1; }

inline Dataset to_dataset(const std::vector<AttributedGraph>& graphs, const TypeAlphabets& alphabets) {
  Dataset d;
  d.alphabets = alphabets;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const std::string name = "sample-" + std::to_string(i);
    d.records.push_back(alphabets.empty() || graphs[i].node_types.empty() ? to_record(graphs[i].graph, name)
                                                                          : to_record(graphs[i], alphabets, name));
  }
  return d;
}

class SampleCommand final : public Command {
 public:
  explicit SampleCommand(CLI::App& app) : Command(app, "sample", "sample graphs from a checkpoint") {
    require(add("checkpoint", checkpoint, "model checkpoint"));
    add("num_graphs", cfg.num_graphs, "graphs to generate");
    add("max_tokens", max_tokens, "token cap per stream (0: derived from the positional capacity)");
    add("temperature", cfg.temperature, "softmax temperature");
    choices(add("masking", masking, "auto (grammar if attributed, else off) | off | validity | grammar"),
            {"auto", "off", "validity", "grammar"});
    flag("resample", cfg.resample_invalid, "redraw invalid samples until num_graphs are valid");
    add("max_attempts", cfg.max_attempts, "attempt cap with --resample (0: 10 x num_graphs)");
    add("threads", cfg.threads, "worker threads (0: GEEL_THREADS or 1)");
  }

  std::string checkpoint, masking = "auto";
  std::size_t max_tokens = 0;
  SampleConfig cfg;

 private:
  void run() override {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const auto codec = SequenceCodec::from_json(ck.codec);
    if (masking == "auto") masking = codec->mode() == SequenceMode::attributed ? "grammar" : "off";
    cfg.masking = parse_masking(masking);
    cfg.seed = seed;
    cfg.max_tokens = max_tokens ? max_tokens : auto_max_tokens(ck.config.max_nodes);
    if (cfg.masking == Masking::grammar && codec->mode() != SequenceMode::attributed)
      throw ConfigError("grammar masking needs an attributed checkpoint");
    if (cfg.masking == Masking::validity && codec->mode() == SequenceMode::attributed)
      throw ConfigError("attributed checkpoints use grammar masking");
    const SampleBatch batch = sample_graphs(ck.params, *codec, cfg);
    save_graphs(to_dataset(batch.graphs, alphabets_of(ck.codec)), (dir() / "samples.jsonl").string());
    json report = batch.report.to_json();
    report["masking"] = masking;
    report["temperature"] = cfg.temperature;
    write_file(dir() / "report.json", report.dump(2) + "\n");
    std::cout << report.dump() << "\n";
  }
};

class EvalCommand final : public Command {
 public:
  explicit EvalCommand(CLI::App& app) : Command(app, "eval", "MMD between generated and reference graphs") {
    require(add("generated", generated, "generated dataset JSONL"));
    require(add("reference", reference, "reference dataset JSONL"));
    add("sigma", sigma, "Gaussian kernel width over total-variation distance");
  }

  std::string generated, reference;
  double sigma = 1.0;

 private:
  void run() override {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    const auto gen = plain_graphs(load_graphs(generated));
    const auto ref = plain_graphs(load_graphs(reference));
    const MmdReport r = evaluate(gen, ref, sigma);
    for (const auto& w : r.warnings) std::cerr << json{{"warning", w}}.dump() << "\n";
    write_file(dir() / "mmd.json", r.to_json().dump(2) + "\n");
    write_file(dir() / "mmd.csv", r.to_csv());
    std::cout << r.to_json().dump() << "\n";
  }
};

class TimingCommand final : public Command {
 public:
  explicit TimingCommand(CLI::App& app) : Command(app, "timing", "generation time versus sequence length") {
    require(add("checkpoint", checkpoint, "model checkpoint"));
    add("edges", edges, "target edge counts M");
    add("grid_sides", grid_sides, "square grid sides k, each adding M = 2k(k-1)");
    add("repeats", repeats, "runs averaged per size");
  }

  std::string checkpoint;
  std::vector<std::size_t> edges, grid_sides;
  std::size_t repeats = 3;

 private:
  void run() override {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const auto codec = SequenceCodec::from_json(ck.codec);
    std::vector<std::size_t> sizes = edges;
    for (std::size_t k : grid_sides) sizes.push_back(2 * k * (k - 1));
    const auto rows = timing_sweep(ck.params, *codec, sizes, repeats, seed);
    const std::string csv = timing_csv(rows);
    write_file(dir() / "timing.csv", csv);
    std::cout << csv;
  }
};

// ---- ablations ------------------------------------------------------------

class AblateOrderingCommand final : public TrainingCommand {
 public:
  explicit AblateOrderingCommand(CLI::App& app)
      : TrainingCommand(app, "ablate-ordering", "training curves under different node orderings") {
    add("orderings", orderings, "ordering families to compare")->check(CLI::IsMember(kOrderings));
  }

  std::vector<std::string> orderings{"cm", "bfs", "dfs", "random"};

 private:
  void run() override {
    const Dataset d = load_training_set(train_path);
    const auto graphs = graphs_for_mode(d);
    json summary = json::object();
    for (const auto& fam : orderings) {
      // C-M draws its start node per step; the other families are random by construction
      const OrderingSpec spec = ordering_spec(fam, fam == "cm" ? start : "deterministic", reverse);
      const auto o = train_model(graphs, d.alphabets, codec_options(spec, Representation::geel), train_config(spec),
                                 model, [&](const TrainOutcome& t) { log_epoch(fam, t); });
      write_file(dir() / ("loss_" + fam + ".csv"), curve_csv(o.curve));
      json losses = json::array();
      for (const auto& e : o.curve) losses.push_back(e.loss);
      summary[fam] = {{"final_loss", o.curve.empty() ? 0.0 : o.curve.back().loss},
                      {"vocab_size", o.fit.codec->vocab_size()},
                      {"losses", losses}};
    }
    write_file(dir() / "summary.json", summary.dump(2) + "\n");
    json brief = json::object();
    for (const auto& [fam, v] : summary.items()) brief[fam] = v["final_loss"];
    std::cout << brief.dump() << "\n";
  }
};

class AblateReprCommand final : public TrainingCommand {
 public:
  explicit AblateReprCommand(CLI::App& app)
      : TrainingCommand(app, "ablate-repr", "train and evaluate alternative token representations") {
    add("representations", representations, "representations to compare")->check(CLI::IsMember(kRepresentations));
    add("test", test_path, "held-out dataset JSONL (default: split off test_frac of --train)");
    add("test_frac", test_frac, "held-out share when --test is absent");
    add("num_samples", num_samples, "generated graphs per representation (0: test-set size)");
  }

  std::vector<std::string> representations{"geel", "edge-list", "intra-gap"};
  std::string test_path;
  double test_frac = 0.2;
  std::size_t num_samples = 0;

 private:
  void run() override {
    if (parse_sequence_mode(mode) != SequenceMode::plain) throw ConfigError("ablate-repr runs in plain mode");
    Dataset train = load_training_set(train_path);
    Dataset test;
    if (!test_path.empty()) {
      test = load_graphs(test_path);
    } else {
      Rng rng(seed);
      auto [a, b] = split(train.records, 1.0 - test_frac, rng);
      train.records = std::move(a);
      test = {train.alphabets, std::move(b)};
    }
    if (test.records.empty()) throw ConfigError("empty held-out set");
    const auto graphs = graphs_for_mode(train);
    const auto reference = plain_graphs(test);
    const OrderingSpec spec = ordering_spec(ordering, start, reverse);
    json summary = json::object();
    for (const auto& name : representations) {
      const auto o = train_model(graphs, train.alphabets, codec_options(spec, parse_representation(name)),
                                 train_config(spec), model, [&](const TrainOutcome& t) { log_epoch(name, t); });
      write_file(dir() / ("loss_" + name + ".csv"), curve_csv(o.curve));
      SampleConfig sc;
      sc.num_graphs = num_samples ? num_samples : reference.size();
      sc.max_tokens = auto_max_tokens(o.run.model_config.max_nodes);
      sc.seed = seed;
      const SampleBatch batch = sample_graphs(o.run.params, *o.fit.codec, sc);
      json entry = {{"final_loss", o.curve.empty() ? 0.0 : o.curve.back().loss},
                    {"vocab_size", o.fit.codec->vocab_size()},
                    {"sampling", batch.report.to_json()}};
      if (!batch.graphs.empty()) {
        std::vector<Graph> gen;
        for (const auto& g : batch.graphs) gen.push_back(g.graph);
        const MmdReport r = evaluate(gen, reference);
        entry["mmd"] = r.to_json();
        entry["average_mmd"] = (r.degree + r.clustering + r.orbit) / 3.0;
      } else {
        entry["mmd"] = nullptr;
      }
      summary[name] = entry;
    }
    write_file(dir() / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump() << "\n";
  }
};

// ---- entry point ----------------------------------------------------------

inline void report_error(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

inline int main(int argc, const char* const* argv) {
  CLI::App app{"GEEL graph generation toolkit", "geel"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> commands;
  commands.push_back(std::make_unique<DatasetCommand>(app));
  commands.push_back(std::make_unique<StatsCommand>(app));
  commands.push_back(std::make_unique<EncodeCommand>(app));
  commands.push_back(std::make_unique<DecodeCommand>(app));
  commands.push_back(std::make_unique<TrainCommand>(app));
  commands.push_back(std::make_unique<SampleCommand>(app));
  commands.push_back(std::make_unique<EvalCommand>(app));
  commands.push_back(std::make_unique<TimingCommand>(app));
  commands.push_back(std::make_unique<AblateOrderingCommand>(app));
  commands.push_back(std::make_unique<AblateReprCommand>(app));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    report_error("config", e.what(), kExitConfig);
    return kExitConfig;
  }
  for (auto& cmd : commands) {
    if (!cmd->selected()) continue;
    try {
      cmd->apply_config();
      cmd->check_required();
      cmd->execute();
      return kExitOk;
    } catch (const ConfigError& e) {
      report_error("config", e.what(), kExitConfig);
      return kExitConfig;
    } catch (const std::exception& e) {
      report_error("runtime", e.what(), kExitRuntime);
      return kExitRuntime;
    }
  }
  return kExitOk;
}

}  // namespace geel::cli
