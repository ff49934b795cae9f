//! Index providers: the planar waveguide (fundamental-mode effective
//! indices) and the bare bulk crystal.

use crate::dispersion::{MaterialModel, Polarization};
use crate::error::Result;
use crate::slabmode::{self, PolClass, SlabGeometry, SlabMode, ZGrid};

/// H photons propagate as TE modes, V photons as TM modes.
pub fn pol_class(pol: Polarization) -> PolClass {
    match pol {
        Polarization::H => PolClass::TE,
        Polarization::V => PolClass::TM,
    }
}

/// Step-index planar waveguide: film = substrate + Δn on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveguide {
    pub material: MaterialModel,
    /// µm.
    pub depth: f64,
    pub delta_n: f64,
    pub n_cover: f64,
}

impl Waveguide {
    pub fn new(material: MaterialModel, depth: f64, delta_n: f64, n_cover: f64) -> Self {
        Waveguide { material, depth, delta_n, n_cover }
    }

    /// KTP, 2 µm deep, Δn = 0.02, air cover.
    pub fn ktp_default() -> Self {
        Waveguide::new(MaterialModel::ktp(), 2.0, 0.02, 1.0)
    }

    pub fn geometry(&self, pol: Polarization, wavelength: f64) -> Result<SlabGeometry> {
        let n_sub = self.material.substrate_index(pol, wavelength)?;
        let geom = SlabGeometry {
            depth: self.depth,
            n_film: n_sub + self.delta_n,
            n_substrate: n_sub,
            n_cover: self.n_cover,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn grid(&self) -> ZGrid {
        ZGrid::for_depth(self.depth)
    }

    pub fn modes(&self, pol: Polarization, wavelength: f64) -> Result<Vec<SlabMode>> {
        slabmode::solve_modes(&self.geometry(pol, wavelength)?, wavelength, pol_class(pol))
    }

    pub fn fundamental(&self, pol: Polarization, wavelength: f64) -> Result<SlabMode> {
        let geom = self.geometry(pol, wavelength)?;
        slabmode::fundamental_mode(&geom, wavelength, pol_class(pol), self.grid())
    }
}

/// Source of the index that sets a photon's propagation constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Medium {
    Planar(Waveguide),
    Bulk(MaterialModel),
}

impl Medium {
    /// Fundamental-mode effective index (planar) or substrate index (bulk).
    pub fn index(&self, pol: Polarization, wavelength: f64) -> Result<f64> {
        match self {
            Medium::Planar(wg) => {
                let geom = wg.geometry(pol, wavelength)?;
                slabmode::effective_indices(&geom, wavelength, pol_class(pol))?
                    .first()
                    .copied()
                    .ok_or(crate::Error::NoGuidedMode { pol: pol_class(pol).to_string(), wavelength })
            }
            Medium::Bulk(m) => m.substrate_index(pol, wavelength),
        }
    }

    pub fn material(&self) -> &MaterialModel {
        match self {
            Medium::Planar(wg) => &wg.material,
            Medium::Bulk(m) => m,
        }
    }
}
