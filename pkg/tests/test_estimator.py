import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lfvideo.core import LightFieldVideo
from lfvideo.estimator import LightFieldSynthesizer, check_frames, check_videos
from lfvideo.model import NetworkConfig
from lfvideo.scenegen import make_dataset

TINY = dict(base_channels=4, fin_channels=8, decoder_channels=(8, 4), occ_channels=(4, 4, 4), max_disp=2, crop=16)


def test_params_mirror_config():
    est = LightFieldSynthesizer()
    assert set(est.get_params()) == {f for f in NetworkConfig().to_dict()}
    assert est.to_config() == NetworkConfig()
    est.set_params(eta=0.5, w_temp=0.0)
    cloned = clone(est)
    assert cloned.eta == 0.5 and cloned.w_temp == 0.0
    assert not hasattr(cloned, "net_")


def test_validation_helpers():
    assert check_frames(np.zeros((2, 4, 4))).shape == (2, 4, 4, 1)
    with pytest.raises(ValueError):
        check_frames(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        check_frames(np.full((1, 4, 4, 3), np.nan))
    with pytest.raises(ValueError):
        check_frames(np.zeros((1, 4, 4, 3)), channels=1)
    with pytest.raises(ValueError):
        check_videos([])
    with pytest.raises(TypeError):
        check_videos([np.zeros(3)])


def test_unfitted_estimator_refuses_to_predict():
    with pytest.raises(NotFittedError):
        LightFieldSynthesizer().predict(np.zeros((1, 16, 16, 3)))


def test_fit_predict_score():
    data = make_dataset(1, {"height": 16, "width": 16, "frame_count": 2, "disparity_range": [0.0, 0.9]}, seed=1)
    est = LightFieldSynthesizer(**TINY, total_iters=2, warmup_iters=1).fit(data[0])
    assert est.n_channels_ == 3 and len(est.loss_log_) == 2
    frames = np.stack([f.center for f in data[0].frames])
    out = est.predict(frames)
    assert isinstance(out, LightFieldVideo) and len(out) == 2
    np.testing.assert_array_equal(out.frames[0].center, frames[0])
    score = est.score(data)
    assert np.isfinite(score) and score > 0
