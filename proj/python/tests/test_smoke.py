import math

import numpy as np
import pytest

import ecgnet


def test_sign_loss_worked_values():
    total, terms = ecgnet.sign_loss(np.array([[0.8, 0.6]]), np.array([[1.0, 0.0]]))
    assert terms.shape == (1, 2)
    assert terms[0, 0] == pytest.approx(0.0089257, abs=1e-6)
    assert terms[0, 1] == pytest.approx(0.9162907, abs=1e-6)
    assert total == pytest.approx(terms.sum())


def test_sign_loss_grad_matches_difference():
    p, y, h = 0.3, 1.0, 1e-7
    g = ecgnet.sign_loss_grad(np.array([[p]]), np.array([[y]]))[0, 0]
    up = ecgnet.sign_loss(np.array([[p + h]]), np.array([[y]]))[0]
    down = ecgnet.sign_loss(np.array([[p - h]]), np.array([[y]]))[0]
    assert g == pytest.approx((up - down) / (2 * h), rel=1e-5)


def test_rpeaks_on_synthetic_record():
    rec = ecgnet.synth(bpm=50, fs=500, duration=10, noise=0.02, seed=1)
    assert rec["signals"].shape == (12, 5000)
    lead_i = rec["signals"][rec["lead_names"].index("I")]
    peaks, rr = ecgnet.detect_rpeaks(lead_i, 500)
    assert len(peaks) == len(rec["beat_indices"])
    assert np.mean(rr) == pytest.approx(1.2, abs=0.02)
    assert ecgnet.brady_rule(rr)


def test_brady_and_veto():
    assert ecgnet.final_brady(True, True)
    assert not ecgnet.final_brady(True, False)
    assert not ecgnet.brady_rule([2.0] * 5)
    probs = [0.0] * ecgnet.NUM_CLASSES
    brady = ecgnet.class_abbreviations().index("Brady")
    nsr = ecgnet.class_abbreviations().index("NSR")
    probs[brady] = 0.9
    _, labels = ecgnet.postprocess(probs, rule_brady=False)
    assert labels[brady] == 0 and labels[nsr] == 1
    _, labels = ecgnet.postprocess(probs, rule_brady=True)
    assert labels[brady] == 1


def test_denoise_reduces_error():
    clean = ecgnet.synth(bpm=70, seed=4)["signals"][1]
    noisy = ecgnet.synth(bpm=70, seed=4, noise=0.1)["signals"][1]
    out = np.asarray(ecgnet.wavelet_denoise(noisy))
    rmse = lambda a: math.sqrt(np.mean((a - clean) ** 2))
    assert rmse(out) < rmse(noisy)


def test_challenge_score_boundaries():
    abbrs = ecgnet.class_abbreviations()
    row = lambda *names: [int(a in names) for a in abbrs]
    truth = [row("AF"), row("SB"), row("NSR", "PVC")]
    assert ecgnet.challenge_score(truth, truth)["normalized"] == pytest.approx(1.0, abs=1e-12)
    nsr = [row("NSR")] * 3
    assert ecgnet.challenge_score(nsr, truth)["normalized"] == pytest.approx(0.0, abs=1e-12)


def test_errors_map_to_exceptions():
    with pytest.raises(ecgnet.ValidationError):
        ecgnet.synth(bpm=400)
    with pytest.raises(ecgnet.EcgnetError):
        ecgnet.sign_loss(np.zeros((2, 2)), np.zeros((2, 3)))
