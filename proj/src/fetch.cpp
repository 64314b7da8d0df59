#include "entroherd/experiments.hpp"

#include <chrono>
#include <cstdlib>
#include <string>

#include "entroherd/errors.hpp"

#ifdef ENTROHERD_HAVE_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <openssl/evp.h>
#endif

namespace entroherd {

namespace {

constexpr const char* kUrlRed =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/wine-quality/"
    "winequality-red.csv";
constexpr const char* kUrlWhite =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/wine-quality/"
    "winequality-white.csv";

std::string data_dir(const KeyValueConfig& config) {
  if (config.has("data_dir")) return config.get_string("data_dir");
  if (const char* env = std::getenv("ENTROHERD_DATA_DIR")) return env;
  return "data";
}

#ifdef ENTROHERD_HAVE_TLS

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    if (ctx != nullptr) EVP_MD_CTX_free(ctx);
    throw NumericalError("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string http_get(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("malformed url: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client client(base);
  client.set_follow_location(true);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(120, 0);
  const httplib::Result res = client.Get(path);
  if (!res) {
    throw DataError("download failed: " + url + " (" + httplib::to_string(res.error()) + ")");
  }
  if (res->status != 200) {
    throw DataError("download failed: " + url + " (HTTP " + std::to_string(res->status) + ")");
  }
  return res->body;
}

std::string lowercase(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

#endif  // ENTROHERD_HAVE_TLS

}  // namespace

ExperimentReport cmd_fetch(const RunOptions& opt) {
#ifndef ENTROHERD_HAVE_TLS
  (void)opt;
  throw ConfigError(
      "this binary was built without TLS support; download winequality-red.csv and "
      "winequality-white.csv manually into the data directory");
#else
  const auto started = std::chrono::steady_clock::now();
  const KeyValueConfig& c = opt.config;
  const std::string dir = data_dir(c);
  ExperimentReport report = ExperimentReport::make("fetch", opt.seed);
  report.echo("data_dir", dir);

  const std::pair<std::string, std::string> files[] = {{"red", kUrlRed},
                                                       {"white", kUrlWhite}};
  for (const auto& [color, default_url] : files) {
    const std::string url = c.get_string("url_" + color, default_url);
    report.echo("url_" + color, url);
    const std::string body = http_get(url);
    if (c.has("sha256_" + color)) {
      const std::string want = lowercase(c.get_string("sha256_" + color));
      const std::string got = sha256_hex(body);
      if (got != want) {
        throw DataError("checksum mismatch for " + url + ": expected " + want + ", got " +
                        got);
      }
      report.echo("sha256_" + color, want);
    }
    const std::string path = dir + "/winequality-" + color + ".csv";
    write_text_file(path, body);
    report.add_artifact("path_" + color, path);
    report.set_metric("bytes_" + color, static_cast<double>(body.size()));
  }

  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.save(opt.out_dir + "/fetch/report.json");
  return report;
#endif
}

}  // namespace entroherd
