import pytest

from rankmatch.core import DataFormatError
from rankmatch.elicitation import (
    load_responses,
    KeepObject,
    LotteryResponse,
    LotteryTask,
    Money,
    MplResponse,
    decode_mpl,
    encode_mpl,
    loss_aversion_loss,
    resolve_lottery_payment,
    resolve_mpl_payment,
)


def test_decode_goldens():
    assert decode_mpl(MplResponse(16, 28)) == 1656
    assert decode_mpl(MplResponse(1, 50)) == 200
    assert decode_mpl(MplResponse(50, 1)) == 5002
    assert decode_mpl(MplResponse(0, 1)) == 0


def test_row_validation():
    with pytest.raises(ValueError):
        MplResponse(51, 1)
    with pytest.raises(ValueError):
        MplResponse(1, 0)
    with pytest.raises(ValueError):
        LotteryResponse(LotteryTask.HOLT_LAURY, 0)


def test_round_trip_all_pairs():
    for s1 in range(1, 51):
        for s2 in range(1, 51):
            v = decode_mpl(MplResponse(s1, s2))
            assert encode_mpl(v) == MplResponse(s1, s2)
    assert encode_mpl(0) == MplResponse(0, 1)
    with pytest.raises(ValueError):
        encode_mpl(3)
    with pytest.raises(ValueError):
        encode_mpl(2)  # below the screen-1 grid


def test_decode_strictly_increasing():
    prev = -1
    for s1 in range(1, 51):
        for s2 in range(1, 51):
            v = decode_mpl(MplResponse(s1, s2))
            assert v > prev
            prev = v


def test_mpl_payment_rules():
    resp = MplResponse(16, 28)
    assert resolve_mpl_payment(resp, 10, 1) == KeepObject()
    assert resolve_mpl_payment(resp, 20, 1) == Money(2000)
    assert resolve_mpl_payment(resp, 16, 40) == Money(1680)
    assert resolve_mpl_payment(resp, 16, 28) == KeepObject()
    assert resolve_mpl_payment(resp, 16, 29) == Money(1658)
    with pytest.raises(ValueError):
        resolve_mpl_payment(resp, 0, 1)


def test_mpl_payment_consistent_with_decode():
    resp = MplResponse(7, 13)
    value = decode_mpl(resp)
    for draw1 in range(1, 51):
        for draw2 in (1, 13, 14, 50):
            result = resolve_mpl_payment(resp, draw1, draw2)
            if isinstance(result, Money):
                assert result.amount_cents > value
            elif draw1 < resp.screen1_row:
                assert result == KeepObject()


def test_holt_laury():
    hl = LotteryResponse(LotteryTask.HOLT_LAURY, 30)
    assert resolve_lottery_payment(hl, 50, 0.5) == Money(3800)  # row 50: 100% high
    hl50 = LotteryResponse(LotteryTask.HOLT_LAURY, 50)
    assert resolve_lottery_payment(hl50, 1, 0.01) == Money(2400)
    assert resolve_lottery_payment(hl50, 1, 0.5) == Money(2000)
    assert resolve_lottery_payment(hl, 31, 0.9) == Money(1200)


def test_loss_aversion():
    assert loss_aversion_loss(1) == 2000
    assert loss_aversion_loss(50) == 40
    la = LotteryResponse(LotteryTask.LOSS_AVERSION, 10)
    assert resolve_lottery_payment(la, 5, 0.7) == Money(2000)
    assert resolve_lottery_payment(la, 5, 0.2) == Money(3000)
    assert resolve_lottery_payment(la, 11, 0.2) == Money(3000 - loss_aversion_loss(11))
    assert resolve_lottery_payment(la, 11, 0.7) == Money(3000)


def test_load_responses(tmp_path):
    path = tmp_path / "resp.csv"
    path.write_text(
        "subject_id,task_id,screen1_row,screen2_row,switch_row\n"
        "s1,mpl,16,28,\n"
        "s1,holt_laury,,,30\n"
        "s2,loss_aversion,,,10\n")
    rows = load_responses(path)
    assert rows == [
        ("s1", MplResponse(16, 28)),
        ("s1", LotteryResponse(LotteryTask.HOLT_LAURY, 30)),
        ("s2", LotteryResponse(LotteryTask.LOSS_AVERSION, 10)),
    ]


def test_load_responses_errors(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("subject,task\n")
    with pytest.raises(DataFormatError, match="header"):
        load_responses(bad_header)
    bad_row = tmp_path / "r.csv"
    bad_row.write_text(
        "subject_id,task_id,screen1_row,screen2_row,switch_row\n"
        "s1,mpl,16,99,\n")
    with pytest.raises(DataFormatError, match=":2:"):
        load_responses(bad_row)


def test_lottery_validation():
    la = LotteryResponse(LotteryTask.LOSS_AVERSION, 10)
    with pytest.raises(ValueError):
        resolve_lottery_payment(la, 51, 0.5)
    with pytest.raises(ValueError):
        resolve_lottery_payment(la, 5, 1.0)
