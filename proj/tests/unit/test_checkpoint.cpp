#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <cstring>
#include <random>

#include "gqn/checkpoint.hpp"
#include "gqn/errors.hpp"
#include "gqn/model.hpp"
#include "gqn/trainer.hpp"

using namespace gqn;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "gqn_unit_checkpoint";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
    nn::ParameterSet ps;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1e3);
    nn::Tensor a(3, 4), b(1, 7);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = n(rng) * 1e-300;
    b(0, 0) = -0.0;
    b(0, 1) = std::numeric_limits<double>::denorm_min();
    ps.add("layer.weight", a);
    ps.add("layer.bias", b);
    ps.add("empty", nn::Tensor(0, 3));
    const auto path = scratch("roundtrip.bin");
    nn::save_checkpoint(path, "{\"k\": 1}", ps);
    const auto ck = nn::load_checkpoint(path);
    CHECK(ck.descriptor == "{\"k\": 1}");
    REQUIRE(ck.params.same_layout(ps));
    auto it = ck.params.begin();
    for (const auto& p : ps) {
        CHECK(it->name == p.name);
        CHECK(std::memcmp(it->value.data(), p.value.data(), sizeof(double) * static_cast<std::size_t>(p.value.size())) == 0);
        ++it;
    }
}

TEST_CASE("corrupt or foreign files are incompatible") {
    const auto junk = scratch("junk.bin");
    {
        std::ofstream(junk) << "definitely not a checkpoint";
    }
    CHECK_THROWS_AS(nn::load_checkpoint(junk), CheckpointIncompatible);
    CHECK_THROWS_AS(nn::load_checkpoint(scratch("missing.bin")), std::exception);

    nn::ParameterSet ps;
    ps.add("w", nn::Tensor::Ones(4, 4));
    const auto good = scratch("good.bin");
    nn::save_checkpoint(good, "{}", ps);
    const auto size = std::filesystem::file_size(good);
    std::filesystem::resize_file(good, size - 9);
    CHECK_THROWS_AS(nn::load_checkpoint(good), CheckpointIncompatible);
}

TEST_CASE("trained model checkpoint restores architecture, schedule and counters") {
    auto m = make_model(default_spec(ModelKind::gqn_gat, 9, 9), 4);
    const EpsilonSchedule sched{1.0, 0.05, 1234};
    const auto path = scratch("trained.bin");
    train::save_trained(path, *m, sched, 77, 99);
    const auto loaded = train::load_trained(path);
    CHECK(loaded.algorithm == "gqn_gat");
    CHECK(loaded.model->spec() == m->spec());
    CHECK(loaded.schedule.final_value == 0.05);
    CHECK(loaded.schedule.decay_steps == 1234);
    CHECK(loaded.train_steps == 77);
    CHECK(loaded.env_steps == 99);
    auto it = loaded.model->params().begin();
    for (const auto& p : m->params()) {
        CHECK(it->value == p.value);
        ++it;
    }
}

TEST_CASE("descriptor and parameters that disagree are incompatible") {
    auto m = make_model(default_spec(ModelKind::gqn_gcn, 9, 3), 4);
    const auto path = scratch("mismatch.bin");
    auto spec = m->spec();
    spec.gnn_width = 16;
    {
        const std::string desc = "{\"algorithm\": \"gqn\", \"model\": " + spec.to_json() +
                                 ", \"epsilon\": {\"initial\": 1.0, \"final\": 0.01, \"decay_steps\": 10},"
                                 " \"train_steps\": 0, \"env_steps\": 0}";
        nn::save_checkpoint(path, desc, m->params());
    }
    CHECK_THROWS_AS(train::load_trained(path), CheckpointIncompatible);
    nn::save_checkpoint(path, "{\"algorithm\": \"gqn\"}", m->params());
    CHECK_THROWS_AS(train::load_trained(path), CheckpointIncompatible);
}
