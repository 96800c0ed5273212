from app.core.errors import ConfigurationError
from app.schemas.simulation import SimConfig
from app.services import simulation_engine


class TestRunRegistry:
    """Testes para o registro persistente de execuções."""

    def setup_method(self):
        self.config = SimConfig(road_length_m=300, density_veh_per_100m=4, warmup_ms=0, duration_ms=300, seed=4)

    def test_create_run(self, registry):
        run = registry.create_run(self.config)
        assert run.status == "queued"
        assert run.seed == "4"
        assert run.config_hash == self.config.config_hash()
        assert registry.get_run(run.id).config == self.config.model_dump(mode="json")

    def test_execute_completes(self, registry):
        run = registry.create_run(self.config)
        done = registry.execute(run.id)
        assert done.status == "completed"
        assert done.n_vues == 12
        assert done.finished_at is not None
        assert (registry.output_root / run.id / "prr.csv").exists()

    def test_execute_failure_is_recorded(self, registry, monkeypatch):
        """Erros da simulação vão para o campo error, sem relançar."""
        def explode(self, out_dir):
            raise ConfigurationError("cenário inviável")

        monkeypatch.setattr(simulation_engine.SimulationEngine, "run", explode)
        run = registry.create_run(self.config)
        failed = registry.execute(run.id)
        assert failed.status == "failed"
        assert failed.error == "cenário inviável"

    def test_execute_unknown_run(self, registry):
        assert registry.execute("nao-existe") is None

    def test_list_runs_newest_first(self, registry):
        first = registry.create_run(self.config)
        second = registry.create_run(self.config.with_overrides(scheme="oneshot_rc"))
        runs = registry.list_runs()
        assert [run.id for run in runs] == [second.id, first.id]
        assert [run.id for run in registry.list_runs(scheme="oneshot_rc")] == [second.id]
        assert registry.list_runs(status="completed") == []
