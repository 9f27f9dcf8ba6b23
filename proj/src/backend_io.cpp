#include "aedr/backend_io.hpp"

#include "aedr/error.hpp"
#include "aedr/external_backend.hpp"
#include "aedr/json_io.hpp"

namespace aedr {

using json = nlohmann::json;

json backend_to_json(const LinearAEBackend& backend) {
  json basis = json::array();
  for (Eigen::Index r = 0; r < backend.basis().rows(); ++r) {
    const Eigen::VectorXd row = backend.basis().row(r);
    basis.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  const auto& mean = backend.mean();
  const auto& var = backend.latent_variance();
  return {
      {"schema_version", kBackendSchemaVersion},
      {"kind", "linear_ae"},
      {"name", backend.id()},
      {"width", backend.dims().width},
      {"height", backend.dims().height},
      {"channels", backend.dims().channels},
      {"latent_dim", backend.latent_dim()},
      {"noise_sigma", backend.noise_sigma()},
      {"seed", backend.seed()},
      {"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
      {"basis", std::move(basis)},
      {"latent_variance", std::vector<double>(var.data(), var.data() + var.size())},
  };
}

namespace {

void check_schema(const json& doc) {
  if (!doc.is_object()) throw Error("backend file: expected a JSON object");
  const int version = doc.value("schema_version", -1);
  if (version != kBackendSchemaVersion) {
    throw Error("backend file: unsupported schema_version " + std::to_string(version));
  }
}

}  // namespace

LinearAEBackend linear_backend_from_json(const json& doc) {
  check_schema(doc);
  try {
    if (doc.at("kind") != "linear_ae") throw Error("backend file: kind is not linear_ae");
    const Dims dims{doc.at("width").get<int>(), doc.at("height").get<int>(),
                    doc.at("channels").get<int>()};
    const int k = doc.at("latent_dim").get<int>();
    const auto mean_v = doc.at("mean").get<std::vector<double>>();
    const auto rows = doc.at("basis").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != k) throw Error("backend file: basis has wrong row count");
    Eigen::MatrixXd basis(k, static_cast<Eigen::Index>(mean_v.size()));
    for (int r = 0; r < k; ++r) {
      if (rows[r].size() != mean_v.size()) throw Error("backend file: ragged basis");
      basis.row(r) = Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(),
                                                          static_cast<Eigen::Index>(rows[r].size()));
    }
    Eigen::VectorXd variance = Eigen::VectorXd::Zero(k);
    if (doc.contains("latent_variance")) {
      const auto v = doc.at("latent_variance").get<std::vector<double>>();
      if (static_cast<int>(v.size()) != k) throw Error("backend file: latent_variance length");
      variance = Eigen::Map<const Eigen::VectorXd>(v.data(), k);
    }
    LinearAEBackend backend(dims,
                            Eigen::Map<const Eigen::VectorXd>(
                                mean_v.data(), static_cast<Eigen::Index>(mean_v.size())),
                            std::move(basis), std::move(variance),
                            doc.at("noise_sigma").get<double>(),
                            doc.at("seed").get<std::uint64_t>());
    if (doc.contains("name")) backend.set_name(doc.at("name").get<std::string>());
    return backend;
  } catch (const json::exception& e) {
    throw Error(std::string("backend file: ") + e.what());
  }
}

void save_backend(const LinearAEBackend& backend, const std::filesystem::path& path) {
  write_text_file(path, dump_json(backend_to_json(backend)) + "\n");
}

LinearAEBackend load_linear_backend(const std::filesystem::path& path) {
  return linear_backend_from_json(read_json_file(path));
}

std::unique_ptr<Reconstructor> load_backend(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  check_schema(doc);
  const std::string kind = doc.value("kind", "");
  if (kind == "linear_ae") return std::make_unique<LinearAEBackend>(linear_backend_from_json(doc));
  if (kind == "identity") return std::make_unique<IdentityBackend>();
  if (kind == "external") {
    ExternalBackendOptions opts;
    try {
      opts.command = doc.at("command").get<std::vector<std::string>>();
      opts.pool_size = doc.value("pool_size", 1);
      opts.timeout = std::chrono::milliseconds(doc.value("timeout_ms", 60000));
    } catch (const json::exception& e) {
      throw Error(std::string("backend file: ") + e.what());
    }
    return std::make_unique<ExternalBackend>(std::move(opts));
  }
  throw Error("backend file: unknown kind '" + kind + "'");
}

}  // namespace aedr
