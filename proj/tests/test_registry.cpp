#include <fstream>

#include "doctest.h"
#include "fer/registry.hpp"
#include "support/synthetic.hpp"

using namespace fer;

TEST_CASE("run ids are monotonic and survive reopening") {
    testing::TempDir dir("registry-ids");
    {
        RunRegistry reg(dir.path());
        CHECK(reg.create_run() == "run-0001");
        CHECK(reg.create_run() == "run-0002");
    }
    RunRegistry reopened(dir.path());
    CHECK(reopened.run_ids() == std::vector<std::string>{"run-0001", "run-0002"});
    CHECK(reopened.create_run() == "run-0003");
    CHECK(reopened.has_run("run-0002"));
    CHECK_FALSE(reopened.has_run("run-0009"));
    CHECK_FALSE(reopened.has_run("../x"));
}

TEST_CASE("write_new_file never overwrites") {
    testing::TempDir dir("registry-write");
    const auto p = dir.path() / "a" / "b.txt";
    write_new_file(p, "first");
    CHECK(read_text_file(p) == "first");
    CHECK_THROWS_AS(write_new_file(p, "second"), RegistryError);
    CHECK(read_text_file(p) == "first");
}

TEST_CASE("index appends and verify detects tampering") {
    testing::TempDir dir("registry-index");
    RunRegistry reg(dir.path());
    const auto id = reg.create_run();
    write_new_file(reg.run_dir(id) / "x.txt", "hello");
    write_new_file(reg.run_dir(id) / "y.txt", "world");
    const auto e1 = reg.record(id, "note", "vgg", reg.run_dir(id) / "x.txt");
    const auto e2 = reg.record(id, "note", "", "runs/" + id + "/y.txt");
    CHECK(e1.path == "runs/" + id + "/x.txt");
    CHECK(e1.sha256 == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
    CHECK(e2.architecture == "-");

    const auto idx = reg.index();
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == e1);
    CHECK(idx[1] == e2);
    CHECK(reg.verify().empty());

    { std::ofstream(reg.run_dir(id) / "x.txt", std::ios::app) << "!"; }
    std::filesystem::remove(reg.run_dir(id) / "y.txt");
    const auto problems = reg.verify();
    CHECK(problems.size() == 2);

    CHECK_THROWS_AS(reg.record(id, "note", "-", reg.run_dir(id) / "missing.txt"), RegistryError);
    CHECK(reg.index().size() == 2);
}
