from prefixsim.streams import child_seed, substream


def test_same_key_same_stream():
    a = substream(7, "edge", "0110")
    b = substream(7, "edge", "0110")
    assert a.random(10).tolist() == b.random(10).tolist()


def test_distinct_keys_differ():
    seeds = {
        child_seed(7, "edge", ""),
        child_seed(7, "edge", "0"),
        child_seed(7, "edge", "1"),
        child_seed(7, "user"),
        child_seed(8, "edge", ""),
    }
    assert len(seeds) == 5


def test_creation_order_is_irrelevant():
    first = substream(3, "edge", "01")
    second = substream(3, "edge", "10")
    a1 = first.random(5).tolist()
    a2 = second.random(5).tolist()

    second_again = substream(3, "edge", "10")
    first_again = substream(3, "edge", "01")
    assert second_again.random(5).tolist() == a2
    assert first_again.random(5).tolist() == a1
