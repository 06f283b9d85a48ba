#include <catch2/catch_amalgamated.hpp>
TEST_CASE("placeholder train_test") { CHECK(true); }
