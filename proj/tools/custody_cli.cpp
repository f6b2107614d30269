// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

// Operator CLI. Route commands talk to a running server; chain, ledger,
// corpus, fingerprint, metrics and features commands work offline.

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "custody/api.hpp"
#include "custody/detection.hpp"
#include "custody/error.hpp"
#include "custody/features.hpp"
#include "custody/http_server.hpp"
#include "custody/media.hpp"
#include "custody/metrics.hpp"

using namespace custody;
using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

// ---- remote ----

struct Remote {
    std::string server = env_or("CUSTODY_SERVER", "http://127.0.0.1:8080");
    std::string user = env_or("CUSTODY_USER", "");
    std::string password = env_or("CUSTODY_PASSWORD", "");
    std::string token = env_or("CUSTODY_TOKEN", "");

    httplib::Client client() const {
        httplib::Client c(server);
        c.set_read_timeout(120, 0);
        c.set_write_timeout(120, 0);
        return c;
    }

    std::string bearer() {
        if (!token.empty()) return token;
        if (user.empty() || password.empty()) {
            fail(Errc::invalid_credentials, "set --user/--password, CUSTODY_USER/CUSTODY_PASSWORD or CUSTODY_TOKEN");
        }
        auto res = client().Post("/auth/login", json{{"username", user}, {"password", password}}.dump(),
                                 "application/json");
        if (!res) fail(Errc::storage_failure, "cannot reach " + server);
        const json body = json::parse(res->body, nullptr, false);
        if (res->status != 200 || !body.contains("token")) {
            std::cerr << res->body << '\n';
            fail(Errc::invalid_credentials, "login failed with HTTP " + std::to_string(res->status));
        }
        token = body.at("token").get<std::string>();
        return token;
    }

    // Prints the response body (or writes it to `out`); exit code 0 only on 2xx.
    int call(const std::string& method, const std::string& path, const std::string& body = {},
             const std::string& content_type = "application/octet-stream", const std::string& out = {},
             bool auth = true) {
        httplib::Headers headers;
        if (auth) headers.emplace("Authorization", "Bearer " + bearer());
        auto c = client();
        httplib::Result res = method == "GET" ? c.Get(path, headers) : c.Post(path, headers, body, content_type);
        if (!res) {
            std::cerr << "error: cannot reach " << server << ": " << httplib::to_string(res.error()) << '\n';
            return 3;
        }
        const bool ok = res->status >= 200 && res->status < 300;
        if (ok && !out.empty()) {
            media::write_file(out, as_bytes(res->body));
            std::cout << "wrote " << res->body.size() << " bytes to " << out << '\n';
        } else if (ok) {
            const auto j = nlohmann::ordered_json::parse(res->body, nullptr, false);
            std::cout << (j.is_discarded() ? res->body : j.dump(2)) << '\n';
        } else {
            std::cerr << "HTTP " << res->status << ": " << res->body << '\n';
        }
        return ok ? 0 : 1;
    }
};

std::string read_text(const std::string& path) {
    const Bytes b = media::read_file(path);
    return as_string(b);
}

std::string query_string(const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string q;
    for (const auto& [k, v] : kv) {
        if (v.empty()) continue;
        q += (q.empty() ? "?" : "&") + k + "=" + httplib::detail::encode_query_param(v);
    }
    return q;
}

// ---- offline helpers ----

api::ApiConfig load_config(const std::string& config_path, const std::string& data_dir) {
    api::ApiConfig c = config_path.empty() ? api::ApiConfig{} : api::ApiConfig::load(config_path);
    c = c.with_env();
    if (!data_dir.empty()) c.data_dir = data_dir;
    return c;
}

void write_output(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) fail(Errc::storage_failure, "cannot write " + out);
}

metrics::ConfusionMatrix read_confusion(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::not_found, "cannot open " + path);
    const json j = json::parse(in);
    metrics::ConfusionMatrix cm;
    cm.class_names = j.at("classes").get<std::vector<std::string>>();
    cm.counts = j.at("counts").get<std::vector<std::vector<std::uint64_t>>>();
    return cm;
}

std::string grid_csv(const features::Grid& g) {
    std::ostringstream out;
    out.precision(9);
    for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) out << (c ? "," : "") << g.at(r, c);
        out << '\n';
    }
    return out.str();
}

api::HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"custody: evidence detection and chain-of-custody platform"};
    app.require_subcommand(1);

    Remote remote;
    auto add_remote = [&remote](CLI::App* cmd) {
        cmd->add_option("--server", remote.server, "server URL (CUSTODY_SERVER)");
        cmd->add_option("--user", remote.user, "username (CUSTODY_USER)");
        cmd->add_option("--password", remote.password, "password (CUSTODY_PASSWORD)");
        cmd->add_option("--token", remote.token, "bearer token (CUSTODY_TOKEN)");
    };
    int rc = 0;

    // init / serve
    std::string config_path, data_dir, admin_name = "admin", admin_password = env_or("CUSTODY_ADMIN_PASSWORD", "");
    auto* init = app.add_subcommand("init", "create a data directory with its genesis administrator");
    init->add_option("--config", config_path, "JSON config file");
    init->add_option("--data-dir", data_dir, "data directory");
    init->add_option("--admin", admin_name, "administrator name");
    init->add_option("--admin-password", admin_password, "administrator password (CUSTODY_ADMIN_PASSWORD)");
    init->callback([&] {
        if (admin_password.size() < 8) fail(Errc::validation_failure, "administrator password must be at least 8 characters");
        const auto cfg = load_config(config_path, data_dir);
        api::Platform::init(cfg, admin_name, admin_password);
        std::cout << "initialized " << cfg.data_dir.string() << " with administrator " << admin_name << '\n';
    });

    int port = -1;
    std::string bind;
    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    serve->add_option("--config", config_path, "JSON config file");
    serve->add_option("--data-dir", data_dir, "data directory");
    serve->add_option("--port", port, "listen port");
    serve->add_option("--bind", bind, "bind address");
    serve->callback([&] {
        auto cfg = load_config(config_path, data_dir);
        if (port >= 0) cfg.port = port;
        if (!bind.empty()) cfg.bind_address = bind;
        api::Platform platform(cfg);
        api::Service service(platform);
        api::HttpServer server(service, cfg.max_upload);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "listening on " << cfg.bind_address << ":" << cfg.port << '\n';
        if (!server.listen(cfg.bind_address, cfg.port)) fail(Errc::storage_failure, "cannot listen on port " + std::to_string(cfg.port));
    });

    // ---- route mirrors ----
    auto* health = app.add_subcommand("health", "GET /health");
    add_remote(health);
    health->callback([&] { rc = remote.call("GET", "/health", {}, {}, {}, false); });

    auto* login = app.add_subcommand("login", "print a bearer token");
    add_remote(login);
    login->callback([&] { std::cout << remote.bearer() << '\n'; });

    auto* whoami = app.add_subcommand("whoami", "GET /auth/me");
    add_remote(whoami);
    whoami->callback([&] { rc = remote.call("GET", "/auth/me"); });

    std::string modality, file, out;
    auto* detect = app.add_subcommand("detect", "POST /detect/{image|video|audio}");
    add_remote(detect);
    detect->add_option("modality", modality, "image, video or audio")->required()->check(CLI::IsMember({"image", "video", "audio"}));
    detect->add_option("file", file, "media file")->required()->check(CLI::ExistingFile);
    detect->callback([&] { rc = remote.call("POST", "/detect/" + modality, read_text(file)); });

    auto* fp = app.add_subcommand("fingerprint", "fingerprint commands");
    fp->require_subcommand(1);
    auto* fp_run = fp->add_subcommand("run", "POST /fingerprint");
    add_remote(fp_run);
    fp_run->add_option("file", file, "image file")->required()->check(CLI::ExistingFile);
    fp_run->callback([&] { rc = remote.call("POST", "/fingerprint", read_text(file)); });

    auto* gan = app.add_subcommand("gan", "GAN commands");
    gan->require_subcommand(1);
    auto* gan_rec = gan->add_subcommand("reconstruct", "POST /gan/reconstruct (unsupported by the server)");
    add_remote(gan_rec);
    gan_rec->add_option("file", file, "image file")->required()->check(CLI::ExistingFile);
    gan_rec->callback([&] { rc = remote.call("POST", "/gan/reconstruct", read_text(file)); });

    auto* ev = app.add_subcommand("evidence", "evidence commands");
    ev->require_subcommand(1);
    std::string type, hash;
    auto* ev_reg = ev->add_subcommand("register", "POST /evidence/register");
    add_remote(ev_reg);
    ev_reg->add_option("--type", type, "image, video, audio or document")->required();
    ev_reg->add_option("file", file, "evidence file")->required()->check(CLI::ExistingFile);
    ev_reg->callback([&] { rc = remote.call("POST", "/evidence/register?type=" + type, read_text(file)); });

    auto* ev_ver = ev->add_subcommand("verify", "POST /evidence/{hash}/verify");
    add_remote(ev_ver);
    ev_ver->add_option("hash", hash, "content hash")->required();
    ev_ver->callback([&] { rc = remote.call("POST", "/evidence/" + hash + "/verify", {}, "application/json"); });

    std::string f_verified, f_analyst, f_from, f_to, f_offset, f_limit;
    auto* ev_list = ev->add_subcommand("list", "GET /evidence");
    add_remote(ev_list);
    ev_list->add_option("--type", type);
    ev_list->add_option("--verified", f_verified)->check(CLI::IsMember({"true", "false"}));
    ev_list->add_option("--analyst", f_analyst, "analyst chain address");
    ev_list->add_option("--from", f_from, "registered at or after (unix seconds)");
    ev_list->add_option("--to", f_to, "registered at or before (unix seconds)");
    ev_list->add_option("--offset", f_offset);
    ev_list->add_option("--limit", f_limit);
    ev_list->callback([&] {
        rc = remote.call("GET", "/evidence" + query_string({{"type", type},
                                                            {"verified", f_verified},
                                                            {"analyst", f_analyst},
                                                            {"from", f_from},
                                                            {"to", f_to},
                                                            {"offset", f_offset},
                                                            {"limit", f_limit}}));
    });

    auto* ev_get = ev->add_subcommand("get", "GET /evidence/{hash}");
    add_remote(ev_get);
    ev_get->add_option("hash", hash)->required();
    ev_get->callback([&] { rc = remote.call("GET", "/evidence/" + hash); });

    auto* ev_content = ev->add_subcommand("content", "GET /evidence/{hash}/content");
    add_remote(ev_content);
    ev_content->add_option("hash", hash)->required();
    ev_content->add_option("-o,--out", out, "output file")->required();
    ev_content->callback([&] { rc = remote.call("GET", "/evidence/" + hash + "/content", {}, {}, out); });

    auto* cs = app.add_subcommand("case", "case commands");
    cs->require_subcommand(1);
    std::string case_id, title, status;
    auto* cs_create = cs->add_subcommand("create", "POST /cases");
    add_remote(cs_create);
    cs_create->add_option("title", title)->required();
    cs_create->callback([&] { rc = remote.call("POST", "/cases", json{{"title", title}}.dump(), "application/json"); });

    auto* cs_get = cs->add_subcommand("get", "GET /cases/{id}");
    add_remote(cs_get);
    cs_get->add_option("id", case_id)->required();
    cs_get->callback([&] { rc = remote.call("GET", "/cases/" + case_id); });

    auto* cs_attach = cs->add_subcommand("attach", "POST /cases/{id}/evidence");
    add_remote(cs_attach);
    cs_attach->add_option("id", case_id)->required();
    cs_attach->add_option("hash", hash)->required();
    cs_attach->callback([&] {
        rc = remote.call("POST", "/cases/" + case_id + "/evidence", json{{"content_hash", hash}}.dump(), "application/json");
    });

    auto* cs_status = cs->add_subcommand("status", "POST /cases/{id}/status");
    add_remote(cs_status);
    cs_status->add_option("id", case_id)->required();
    cs_status->add_option("status", status, "submitted, verified or closed")->required();
    cs_status->callback([&] {
        rc = remote.call("POST", "/cases/" + case_id + "/status", json{{"status", status}}.dump(), "application/json");
    });

    auto* cs_bundle = cs->add_subcommand("bundle", "GET /cases/{id}/bundle");
    add_remote(cs_bundle);
    cs_bundle->add_option("id", case_id)->required();
    cs_bundle->add_option("-o,--out", out, "output file");
    cs_bundle->callback([&] { rc = remote.call("GET", "/cases/" + case_id + "/bundle", {}, {}, out); });

    auto* usr = app.add_subcommand("user", "user administration");
    usr->require_subcommand(1);
    std::string name, role, new_password;
    bool enable = false;
    auto* usr_add = usr->add_subcommand("add", "POST /admin/users");
    add_remote(usr_add);
    usr_add->add_option("name", name)->required();
    usr_add->add_option("--role", role, "FORENSIC_ANALYST, LEGAL_AUTHORITY, ADMIN or NORMAL_USER")->required();
    usr_add->add_option("--new-password", new_password, "password for the new account")->required();
    usr_add->callback([&] {
        rc = remote.call("POST", "/admin/users", json{{"name", name}, {"role", role}, {"password", new_password}}.dump(),
                         "application/json");
    });

    auto* usr_list = usr->add_subcommand("list", "GET /admin/users");
    add_remote(usr_list);
    usr_list->callback([&] { rc = remote.call("GET", "/admin/users"); });

    auto* usr_dis = usr->add_subcommand("disable", "POST /admin/users/{name}/disable");
    add_remote(usr_dis);
    usr_dis->add_option("name", name)->required();
    usr_dis->add_flag("--enable", enable, "re-enable instead");
    usr_dis->callback([&] {
        rc = remote.call("POST", "/admin/users/" + name + "/disable", json{{"disabled", !enable}}.dump(),
                         "application/json");
    });

    auto* aud = app.add_subcommand("audit", "GET /admin/audit");
    add_remote(aud);
    aud->add_option("--offset", f_offset);
    aud->add_option("--limit", f_limit);
    aud->callback([&] { rc = remote.call("GET", "/admin/audit" + query_string({{"offset", f_offset}, {"limit", f_limit}})); });

    // ---- offline ----
    auto* pol = app.add_subcommand("policy", "print the route and role policy table as Markdown");
    pol->callback([] { std::cout << api::policy_markdown(api::route_table()); });

    auto* ch = app.add_subcommand("chain", "chain tools");
    ch->require_subcommand(1);
    std::string chain_config, log_path, bundle_path;
    auto* ch_replay = ch->add_subcommand("replay", "replay a transaction log or verify a case bundle");
    ch_replay->add_option("--config", chain_config, "chain/config.json");
    ch_replay->add_option("--log", log_path, "chain/tx.log");
    ch_replay->add_option("--bundle", bundle_path, "case bundle JSON");
    ch_replay->callback([&] {
        if (!bundle_path.empty()) {
            std::ifstream in(bundle_path);
            if (!in) fail(Errc::not_found, "cannot open " + bundle_path);
            const auto check = ledger::verify_case_bundle(json::parse(in));
            std::cout << "claimed_root  " << check.claimed_root.hex() << "\nreplayed_root " << check.replayed_root.hex()
                      << '\n';
            for (const auto& p : check.problems) std::cout << "problem: " << p << '\n';
            std::cout << (check.ok ? "OK" : "MISMATCH") << '\n';
            rc = check.ok ? 0 : 1;
            return;
        }
        if (chain_config.empty() || log_path.empty()) fail(Errc::invalid_argument, "need --bundle or --config and --log");
        std::ifstream in(chain_config);
        if (!in) fail(Errc::not_found, "cannot open " + chain_config);
        const auto cfg = ledger::chain_config_from_json(json::parse(in));
        const auto txs = chain::read_tx_log(log_path);
        const auto t0 = std::chrono::steady_clock::now();
        const auto c = chain::replay(cfg, txs);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto head = c->head();
        std::cout << "transactions " << txs.size() << "\nhead_number  " << head.number << "\nhead_hash    "
                  << head.block_hash.hex() << "\nstate_root   " << c->state_root().hex() << "\nseconds      " << secs
                  << '\n';
    });

    auto* led = app.add_subcommand("ledger", "ledger tools");
    led->require_subcommand(1);
    auto* led_export = led->add_subcommand("export", "write a case bundle from a data directory");
    led_export->add_option("--config", config_path, "JSON config file");
    led_export->add_option("--data-dir", data_dir, "data directory");
    led_export->add_option("--case", case_id)->required();
    led_export->add_option("-o,--out", out, "output file");
    led_export->callback([&] {
        api::Platform platform(load_config(config_path, data_dir));
        write_output(out, ledger::make_case_bundle(platform.ledger(), platform.chain(), case_id).dump(2) + "\n");
    });

    auto* corpus = app.add_subcommand("corpus", "synthetic fingerprint corpus");
    corpus->require_subcommand(1);
    detect::CorpusSpec spec;
    std::string out_dir, format = "grid";
    auto* corpus_gen = corpus->add_subcommand("generate", "write the seeded upsampler corpus");
    corpus_gen->add_option("--out", out_dir, "output directory")->required();
    corpus_gen->add_option("--per-class", spec.per_class_count, "items per class");
    corpus_gen->add_option("--seed", spec.seed, "corpus seed");
    corpus_gen->add_option("--format", format, "grid (lossless) or pnm (8-bit)")->check(CLI::IsMember({"grid", "pnm"}));
    corpus_gen->callback([&] {
        std::filesystem::create_directories(out_dir);
        std::ofstream labels(std::filesystem::path(out_dir) / "labels.tsv", std::ios::trunc);
        labels << "file\tlabel\tindex\n";
        std::size_t n = 0;
        detect::for_each_item(spec, [&](const detect::CorpusItem& item) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s_%05zu.%s", std::string(detect::to_string(item.label)).c_str(), item.index,
                          format == "pnm" ? "pgm" : "cgrd");
            const Bytes data =
                format == "pnm" ? media::encode_pnm(item.image) : media::encode_grid(media::grid_from_image(item.image));
            media::write_file(std::filesystem::path(out_dir) / buf, data);
            labels << buf << '\t' << detect::to_string(item.label) << '\t' << item.index << '\n';
            ++n;
        });
        std::cout << "wrote " << n << " items to " << out_dir << '\n';
    });

    auto* fp_fit = fp->add_subcommand("fit", "fit the fingerprint classifier on the seeded corpus");
    double train_fraction = 0.8;
    fp_fit->add_option("--per-class", spec.per_class_count, "items per class");
    fp_fit->add_option("--seed", spec.seed, "corpus seed");
    fp_fit->add_option("--train-fraction", train_fraction)->check(CLI::Range(0.05, 0.95));
    fp_fit->add_option("-o,--out", out, "calibration output (fingerprint.json)")->required();
    fp_fit->callback([&] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto split = detect::split_profiles(detect::corpus_profiles(spec), train_fraction);
        const auto cal = detect::fit_fingerprint(split.train);
        const auto ev = detect::evaluate_fingerprint(cal, split.test);
        cal.save(out);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "train " << split.train.size() << " test " << split.test.size() << "\nheld_out_accuracy "
                  << metrics::format4(ev.accuracy()) << "\nstage1_accuracy   " << metrics::format4(ev.stage1_accuracy())
                  << "\nseconds " << secs << "\nconfusion (rows true, cols predicted):\n";
        for (std::size_t i = 0; i < 5; ++i) {
            std::cout << "  " << detect::to_string(detect::kAllUpsamplers[i]);
            for (std::size_t j = 0; j < 5; ++j) std::cout << '\t' << ev.confusion[i][j];
            std::cout << '\n';
        }
    });

    auto* met = app.add_subcommand("metrics", "evaluation metrics");
    met->require_subcommand(1);
    std::vector<std::string> score_files, confusion_files;
    std::string report_format = "text";
    metrics::DcfParams dcf;
    auto* met_eval = met->add_subcommand("eval", "score and confusion-matrix metrics");
    met_eval->add_option("--scores", score_files, "id<TAB>label<TAB>score files");
    met_eval->add_option("--confusion", confusion_files, "JSON {classes, counts} files");
    met_eval->add_option("--p-target", dcf.p_target)->check(CLI::Range(0.0, 1.0));
    met_eval->add_option("--c-miss", dcf.c_miss);
    met_eval->add_option("--c-fa", dcf.c_fa);
    met_eval->add_option("--format", report_format)->check(CLI::IsMember({"text", "csv"}));
    met_eval->add_option("-o,--out", out);
    met_eval->callback([&] {
        metrics::Report report;
        for (const auto& f : confusion_files) {
            report.blocks.push_back(metrics::confusion_block(std::filesystem::path(f).stem().string(),
                                                             metrics::confusion_metrics(read_confusion(f))));
        }
        for (const auto& f : score_files) {
            report.blocks.push_back(
                metrics::score_block(std::filesystem::path(f).stem().string(), metrics::read_score_file(f), dcf));
        }
        write_output(out, report_format == "csv" ? report.csv() : report.text());
    });

    auto* feat = app.add_subcommand("features", "signal features");
    feat->require_subcommand(1);
    std::string kind;
    std::string feat_format = "grid";
    auto* feat_ex = feat->add_subcommand("extract", "log-Mel or HPF residual as a grid file or CSV");
    feat_ex->add_option("--kind", kind)->required()->check(CLI::IsMember({"mel", "hpf"}));
    feat_ex->add_option("--format", feat_format, "grid (f32 little-endian with dims) or csv")
        ->check(CLI::IsMember({"grid", "csv"}));
    feat_ex->add_option("file", file, "WAV for mel, PNM or grid for hpf")->required()->check(CLI::ExistingFile);
    feat_ex->add_option("-o,--out", out, "output file")->required();
    feat_ex->callback([&] {
        const Bytes data = media::read_file(file);
        const features::Grid g = kind == "mel" ? features::log_mel(media::decode_audio(data)).values
                                               : features::hpf_laplacian(features::grayscale(media::decode_image(data)));
        if (feat_format == "csv") {
            write_output(out, grid_csv(g));
        } else {
            media::write_file(out, media::encode_grid(media::grid_from_matrix(g)));
        }
        std::cout << kind << ' ' << g.rows << 'x' << g.cols << " -> " << out << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return rc;
}
