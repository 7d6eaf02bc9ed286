use crate::error::{Error, Result};
use crate::forcing::{BodyForcing, IceStrengthField, OceanForcing, PhysParams};
use crate::mesh::TriMesh;
use crate::rheology::RheologyParams;

/// Everything that defines the momentum balance on a fixed mesh, apart from the
/// time grid and solver controls.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: TriMesh,
    pub rheology: RheologyParams,
    pub phys: PhysParams,
    pub ocean: OceanForcing,
    pub body: BodyForcing,
    pub strength: IceStrengthField,
}

impl Problem {
    pub fn new(
        mesh: TriMesh,
        rheology: RheologyParams,
        phys: PhysParams,
        ocean: OceanForcing,
        body: BodyForcing,
        strength: IceStrengthField,
    ) -> Result<Self> {
        let nv = mesh.n_vertices();
        let fields = [
            ("ocean current", ocean.current.n_nodes()),
            ("tau_atm", body.tau_atm.n_nodes()),
            ("grad_h", body.grad_h.n_nodes()),
            ("f_extra", body.f_extra.n_nodes()),
            ("ice strength", strength.p.n_nodes()),
        ];
        for (name, n) in fields {
            if n != nv {
                return Err(Error::MeshMismatch(format!(
                    "{name} field has {n} nodes, mesh has {nv} vertices"
                )));
            }
        }
        Ok(Self {
            mesh,
            rheology,
            phys,
            ocean,
            body,
            strength,
        })
    }

    /// Problem with constant strength `p`, no ocean drag and no body load.
    pub fn unforced(mesh: TriMesh, rheology: RheologyParams, phys: PhysParams, p: f64) -> Result<Self> {
        let nv = mesh.n_vertices();
        Self::new(
            mesh,
            rheology,
            phys,
            OceanForcing::none(nv),
            BodyForcing::zero(nv),
            IceStrengthField::constant(p, nv)?,
        )
    }
}
