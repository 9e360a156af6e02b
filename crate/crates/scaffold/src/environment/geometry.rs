//! Grid geometry: cells, cardinal directions, and compass composition.

use crate::error::{Error, Result};

pub const GRID: i32 = 9;

/// Cardinal walk directions; also answer labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

pub const DIRECTIONS: [Direction; 4] = [
    Direction::North,
    Direction::South,
    Direction::East,
    Direction::West,
];

impl Direction {
    pub fn word(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }

    pub fn parse(word: &str) -> Option<Direction> {
        match word {
            "north" => Some(Direction::North),
            "south" => Some(Direction::South),
            "east" => Some(Direction::East),
            "west" => Some(Direction::West),
            _ => None,
        }
    }

    pub fn offset(self) -> (i32, i32) {
        match self {
            Direction::North => (0, 1),
            Direction::South => (0, -1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }
}

/// Query directions: the four cardinals plus their diagonal compositions,
/// so "north-east of X" is answerable even though walks never move that way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Compass {
    pub dx: i32,
    pub dy: i32,
}

impl Compass {
    pub fn of(d: Direction) -> Compass {
        let (dx, dy) = d.offset();
        Compass { dx, dy }
    }

    /// Parse "north", "north-east", "south-west", ...
    pub fn parse(word: &str) -> Result<Compass> {
        let mut dx = 0;
        let mut dy = 0;
        for part in word.split('-') {
            match Direction::parse(part) {
                Some(d) => {
                    let (x, y) = d.offset();
                    dx += x;
                    dy += y;
                }
                None => {
                    return Err(Error::Contract(format!("unknown direction {word}")));
                }
            }
        }
        if dx.abs() > 1 || dy.abs() > 1 || (dx == 0 && dy == 0) {
            return Err(Error::Contract(format!("degenerate direction {word}")));
        }
        Ok(Compass { dx, dy })
    }
}

/// Grid position. `x` grows east, `y` grows north. World cells live in
/// `[0, GRID)²`; replay reconstructions use the same type unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Cell {
        Cell { x, y }
    }

    pub fn step(self, d: Direction) -> Cell {
        let (dx, dy) = d.offset();
        Cell {
            x: self.x + dx,
            y: self.y + dy,
        }
    }

    pub fn toward(self, c: Compass) -> Cell {
        Cell {
            x: self.x + c.dx,
            y: self.y + c.dy,
        }
    }

    pub fn on_grid(self) -> bool {
        (0..GRID).contains(&self.x) && (0..GRID).contains(&self.y)
    }

    /// The direction from `self` to an adjacent cell, if exactly one step away.
    pub fn direction_to(self, other: Cell) -> Option<Direction> {
        DIRECTIONS.into_iter().find(|&d| self.step(d) == other)
    }
}
